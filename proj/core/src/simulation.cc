// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

#include "srv6k8s/simulation.h"

#include <algorithm>
#include <set>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "nlohmann/json.hpp"

namespace srv6k8s {
namespace {

constexpr size_t kPayloadBytes = 56;

std::vector<uint8_t> PingPayload(size_t seq) {
  std::vector<uint8_t> out(kPayloadBytes);
  out[0] = static_cast<uint8_t>(seq >> 8);
  out[1] = static_cast<uint8_t>(seq);
  for (size_t i = 2; i < kPayloadBytes; ++i) out[i] = static_cast<uint8_t>(i);
  return out;
}

std::string JoinParts(const ChangeSummary& s) {
  std::vector<std::string> parts;
  if (s.added) parts.push_back(absl::StrCat(s.added, " added"));
  if (s.replaced) parts.push_back(absl::StrCat(s.replaced, " replaced"));
  if (s.removed) parts.push_back(absl::StrCat(s.removed, " removed"));
  return absl::StrJoin(parts, ", ");
}

nlohmann::json TraceJson(const TraceRecord& t) {
  nlohmann::json hops = nlohmann::json::array();
  for (const TraceHop& h : t.hops) {
    hops.push_back({{"vertex", h.vertex},
                    {"dst", h.dst.ToString()},
                    {"action", h.action},
                    {"segments_left", h.segments_left}});
  }
  nlohmann::json out = {{"hops", hops}, {"waypoints", Waypoints(t)}};
  if (t.ok()) {
    out["delivered_at"] = t.delivered_at;
  } else {
    out["drop_reason"] = t.drop_reason;
  }
  return out;
}

}  // namespace

std::string FormatPing(const PingReport& r) {
  std::string out = absl::StrCat(
      r.src, " -> ", r.dst, " ", FamilyName(r.family), ": ", r.sent, " sent, ",
      r.delivered, " delivered, ", r.dropped(), " dropped\n");
  for (const auto& [reason, n] : r.drops) {
    absl::StrAppend(&out, "  drop ", reason, ": ", n, "\n");
  }
  return out;
}

std::string ChangeSummary::ToString() const {
  return empty() ? "0 changes" : JoinParts(*this);
}

absl::StatusOr<ShowWhat> ParseShowWhat(absl::string_view text) {
  if (text == "localsids") return ShowWhat::kLocalSids;
  if (text == "policies") return ShowWhat::kPolicies;
  if (text == "steering") return ShowWhat::kSteering;
  if (text == "encap-source") return ShowWhat::kEncapSource;
  return absl::InvalidArgumentError(absl::StrCat(
      "show '", text,
      "' is not one of localsids, policies, steering, encap-source"));
}

Simulation::Simulation(Scenario scenario) : scenario_(std::move(scenario)) {}

absl::StatusOr<std::unique_ptr<Simulation>> Simulation::Create(
    Scenario scenario) {
  if (auto s = ValidateScenario(scenario); !s.ok()) return s;
  std::unique_ptr<Simulation> sim(new Simulation(std::move(scenario)));
  if (auto s = sim->Build(); !s.ok()) return s;
  return sim;
}

absl::Status Simulation::Build() {
  for (const RouterSpec& r : scenario_.routers) {
    if (auto s = topology_.AddRouter(r.id, r.sid); !s.ok()) return s;
  }
  for (const NodeSpec& n : scenario_.nodes) {
    if (auto s = topology_.AddNode(n.name); !s.ok()) return s;
  }
  for (const Link& l : scenario_.links) {
    if (auto s = topology_.AddLink(l); !s.ok()) return s;
  }
  for (const NodeSpec& n : scenario_.nodes) {
    if (auto s = topology_.AddLink({n.link, n.router, n.name, n.link_cost});
        !s.ok()) {
      return s;
    }
  }
  for (const IpPool& p : scenario_.pools) {
    if (auto s = ipam_.AddPool(p); !s.ok()) return s;
  }

  store_ = std::make_unique<ConfigMapStore>(&kv_, scenario_.layout);
  if (scenario_.mode == AgentMode::kConfigMap) {
    for (const ConfigMapDoc& doc : scenario_.configmaps) {
      if (auto v = store_->Write(doc); !v.ok()) return v.status();
    }
  }
  bgp_ = std::make_unique<BgpControlPlane>(scenario_.seed);
  if (scenario_.injector) {
    if (auto s = bgp_->AddExternalPeer(scenario_.injector->name); !s.ok()) {
      return s;
    }
  }

  for (const std::string& r : topology_.routers()) {
    auto dp = std::make_unique<NodeDataplane>(r);
    if (auto sid = topology_.RouterSid(r)) {
      if (auto s = dp->InstallLocalSid({*sid, Behavior::End(), 0}); !s.ok()) {
        return s;
      }
    }
    dataplanes_.emplace(r, std::move(dp));
  }

  auto log = [this](const AgentEvent& e) {
    AgentEvent copy = e;
    copy.seq = events_.size() + 1;
    copy.time = time_;
    events_.push_back(std::move(copy));
  };
  for (const NodeSpec& n : scenario_.nodes) {
    auto dp = std::make_unique<NodeDataplane>(n.name);
    AgentConfig config;
    config.node = n.name;
    config.infra = n.infra;
    config.mode = scenario_.mode;
    config.segment_mode = scenario_.segment_mode;
    config.attached_router_sid = topology_.RouterSid(n.router);
    config.originate_policies = scenario_.auto_policies;
    config.pod_prefixes = n.pod_prefixes;
    config.static_dt4 = n.dt4;
    config.static_dt6 = n.dt6;
    config.localsid_pool = n.localsid_pool;
    config.bsid_pool = scenario_.bsid_pool;
    if (scenario_.injector) {
      const auto& peers = scenario_.injector->peers;
      if (std::find(peers.begin(), peers.end(), n.name) != peers.end()) {
        config.accepted_injectors.insert(scenario_.injector->name);
      }
    }
    AgentContext ctx{dp.get(), &ipam_, bgp_.get(), store_.get(), log};
    auto agent = std::make_unique<Agent>(std::move(config), std::move(ctx));
    if (auto s = bgp_->AddClusterPeer(n.name, agent->Receiver()); !s.ok()) {
      return s;
    }
    dataplanes_.emplace(n.name, std::move(dp));
    agents_.emplace(n.name, std::move(agent));
  }

  for (const NodeSpec& n : scenario_.nodes) {
    if (auto s = agents_.at(n.name)->Startup(); !s.ok()) return s;
  }
  for (const PodSpec& pod : scenario_.pods) {
    NodeDataplane& dp = *dataplanes_.at(pod.node);
    for (Family f : pod.families) {
      std::optional<IpAddress> addr = PodAddress(pod.name, f);
      if (!addr) {
        return absl::InvalidArgumentError(
            absl::StrCat("pod ", pod.name, " has no ", FamilyName(f),
                         " prefix on ", pod.node));
      }
      dp.AddTenantRoute(0, Prefix::HostRoute(*addr), pod.name);
    }
  }
  if (auto s = RefreshRoutes(); !s.ok()) return s;
  if (auto s = Converge(); !s.ok()) return s;

  if (!scenario_.policies.empty()) {
    if (!scenario_.injector) {
      return absl::InvalidArgumentError("policies need an injector");
    }
    for (const SrPolicySafiUpdate& u : scenario_.policies) {
      if (auto r = Inject(u); !r.ok()) return r.status();
    }
  }
  return absl::OkStatus();
}

absl::Status Simulation::RefreshRoutes() {
  Advertisements adv;
  for (const std::string& r : topology_.routers()) {
    if (auto p = topology_.RouterPrefix(r)) adv[*p] = r;
  }
  for (const NodeSpec& n : scenario_.nodes) {
    adv[Prefix::HostRoute(n.infra)] = n.name;
    const Agent& a = *agents_.at(n.name);
    for (Family f : {Family::kV4, Family::kV6}) {
      if (auto sid = a.dt_sid(f)) adv[Prefix::HostRoute(*sid)] = n.name;
    }
  }
  if (adv == advertised_ && !routes_.per_vertex.empty()) {
    return absl::OkStatus();
  }
  auto routes = ComputeRoutes(topology_, adv);
  if (!routes.ok()) return routes.status();
  routes_ = *std::move(routes);
  advertised_ = std::move(adv);
  for (auto& [name, dp] : dataplanes_) {
    dp->ClearRoutes();
    auto it = routes_.per_vertex.find(name);
    if (it == routes_.per_vertex.end()) continue;
    for (const auto& [prefix, hop] : it->second.entries()) {
      dp->AddRoute(prefix, hop);
    }
  }
  return absl::OkStatus();
}

absl::Status Simulation::Converge() {
  size_t steps = 0;
  while (true) {
    if (steps > scenario_.max_steps) break;
    auto ran = bgp_->bus().RunUntilQuiet(scenario_.max_steps - steps);
    if (!ran.ok()) {
      return absl::DeadlineExceededError(absl::StrCat(
          "no convergence within ", scenario_.max_steps, " steps"));
    }
    steps += *ran;
    steps_ += *ran;
    if (auto s = RefreshRoutes(); !s.ok()) return s;
    if (scenario_.mode != AgentMode::kConfigMap) return absl::OkStatus();

    time_ += scenario_.poll_interval;
    bool changed = false;
    for (const NodeSpec& n : scenario_.nodes) {
      changed |= agents_.at(n.name)->Poll();
    }
    ++steps;
    ++steps_;
    if (!changed && bgp_->bus().pending() == 0) {
      return RefreshRoutes();
    }
  }
  return absl::DeadlineExceededError(
      absl::StrCat("no convergence within ", scenario_.max_steps, " steps"));
}

std::optional<IpAddress> Simulation::PodAddress(absl::string_view pod,
                                                Family family) const {
  const PodSpec* spec = scenario_.FindPod(pod);
  if (spec == nullptr) return std::nullopt;
  if (std::find(spec->families.begin(), spec->families.end(), family) ==
      spec->families.end()) {
    return std::nullopt;
  }
  const NodeSpec* node = scenario_.FindNode(spec->node);
  if (node == nullptr) return std::nullopt;
  const Prefix* prefix = nullptr;
  for (const Prefix& p : node->pod_prefixes) {
    if (p.family() == family) {
      prefix = &p;
      break;
    }
  }
  if (prefix == nullptr) return std::nullopt;
  uint64_t index = 0;
  for (const PodSpec& other : scenario_.pods) {
    if (&other == spec) break;
    if (other.node == spec->node &&
        std::find(other.families.begin(), other.families.end(), family) !=
            other.families.end()) {
      ++index;
    }
  }
  if (const auto* v4 = std::get_if<V4Addr>(&prefix->base())) {
    return V4Addr(v4->bits() + static_cast<uint32_t>(index));
  }
  return std::get<V6Addr>(prefix->base()).Plus(index);
}

NodeDataplane* Simulation::dataplane(absl::string_view vertex) {
  auto it = dataplanes_.find(vertex);
  return it == dataplanes_.end() ? nullptr : it->second.get();
}

const NodeDataplane* Simulation::dataplane(absl::string_view vertex) const {
  auto it = dataplanes_.find(vertex);
  return it == dataplanes_.end() ? nullptr : it->second.get();
}

const Agent* Simulation::agent(absl::string_view node) const {
  auto it = agents_.find(node);
  return it == agents_.end() ? nullptr : it->second.get();
}

absl::StatusOr<PingReport> Simulation::RunPing(absl::string_view src_pod,
                                               absl::string_view dst_pod,
                                               size_t count,
                                               std::optional<Family> family) {
  const PodSpec* src = scenario_.FindPod(src_pod);
  const PodSpec* dst = scenario_.FindPod(dst_pod);
  if (src == nullptr || dst == nullptr) {
    return absl::NotFoundError(
        absl::StrCat("unknown pod ", src == nullptr ? src_pod : dst_pod));
  }
  if (!family) {
    for (Family f : {Family::kV4, Family::kV6}) {
      if (PodAddress(src->name, f) && PodAddress(dst->name, f)) {
        family = f;
        break;
      }
    }
    if (!family) {
      return absl::FailedPreconditionError(absl::StrCat(
          src->name, " and ", dst->name, " share no address family"));
    }
  }
  std::optional<IpAddress> src_addr = PodAddress(src->name, *family);
  std::optional<IpAddress> dst_addr = PodAddress(dst->name, *family);
  if (!src_addr || !dst_addr) {
    return absl::FailedPreconditionError(
        absl::StrCat(src->name, " -> ", dst->name, " has no ",
                     FamilyName(*family), " addresses"));
  }

  NodeDataplane& dp = *dataplanes_.at(src->node);
  auto graph = BuildNodeGraph(dp);
  if (!graph.ok()) return graph.status();
  auto resolver = [this](const std::string& v) { return dataplane(v); };

  PingReport report;
  report.src = src->name;
  report.dst = dst->name;
  report.family = *family;
  for (size_t start = 0; start < count; start += kMaxVectorSize) {
    size_t n = std::min(kMaxVectorSize, count - start);
    std::vector<WorkItem> batch(n);
    for (size_t i = 0; i < n; ++i) {
      batch[i].packet = InnerPacket{*family, *src_addr, *dst_addr, 64,
                                    PingPayload(start + i)};
    }
    auto out = graph->RunVector(std::move(batch));
    if (!out.ok()) return out.status();
    for (const TerminalDisposition& d : *out) {
      TraceRecord trace;
      switch (d.kind) {
        case TerminalDisposition::Kind::kDeliver:
          trace.hops.push_back(
              {src->node, V6Addr(), absl::StrCat("deliver ", d.detail)});
          trace.delivered = Deliver{{}, 0, d.detail};
          trace.delivered_at = src->node;
          break;
        case TerminalDisposition::Kind::kDrop:
          trace.hops.push_back(
              {src->node, V6Addr(), absl::StrCat("drop ", d.detail)});
          trace.drop_reason = d.detail;
          break;
        case TerminalDisposition::Kind::kTx: {
          auto outer = DecodeOuter(d.bytes);
          if (!outer.ok()) return outer.status();
          trace = ForwardPacket(topology_, routes_, resolver, src->node,
                                *std::move(outer));
          break;
        }
      }
      ++report.sent;
      if (trace.ok() && trace.delivered_at == dst->node &&
          trace.delivered->egress == dst->name) {
        ++report.delivered;
      } else {
        std::string reason =
            trace.ok() ? absl::StrCat("misdelivered to ", trace.delivered_at,
                                      "/", trace.delivered->egress)
                       : trace.drop_reason;
        ++report.drops[reason];
      }
      report.traces.push_back(std::move(trace));
    }
  }
  return report;
}

absl::StatusOr<PingReport> Simulation::Ping(absl::string_view src_pod,
                                            absl::string_view dst_pod,
                                            size_t count,
                                            std::optional<Family> family) {
  auto report = RunPing(src_pod, dst_pod, count, family);
  if (!report.ok()) return report.status();
  PingReport archived = *report;
  if (archived.traces.size() > 1) archived.traces.resize(1);
  pings_.push_back(std::move(archived));
  return report;
}

absl::StatusOr<TraceRecord> Simulation::Trace(absl::string_view src_pod,
                                              absl::string_view dst_pod,
                                              std::optional<Family> family) {
  auto report = Ping(src_pod, dst_pod, 1, family);
  if (!report.ok()) return report.status();
  return report->traces.front();
}

absl::StatusOr<std::string> Simulation::Show(absl::string_view node,
                                             ShowWhat what) const {
  const NodeDataplane* dp = dataplane(node);
  if (dp == nullptr) {
    return absl::NotFoundError(absl::StrCat("unknown node ", node));
  }
  switch (what) {
    case ShowWhat::kLocalSids:
      return dp->ShowLocalSids();
    case ShowWhat::kPolicies:
      return dp->ShowPolicies();
    case ShowWhat::kSteering:
      return dp->ShowSteering();
    case ShowWhat::kEncapSource:
      return dp->ShowEncapSource();
  }
  return absl::InvalidArgumentError("unknown show target");
}

std::map<std::string, std::map<PolicyKey, PolicySpec>>
Simulation::SnapshotDesired() const {
  std::map<std::string, std::map<PolicyKey, PolicySpec>> out;
  for (const auto& [name, a] : agents_) out[name] = a->desired();
  return out;
}

ChangeSummary Simulation::Summarize(
    const std::map<std::string, std::map<PolicyKey, PolicySpec>>& before)
    const {
  ChangeSummary s;
  for (const auto& [name, a] : agents_) {
    const auto& prev = before.at(name);
    const auto& now = a->desired();
    for (const auto& [key, spec] : now) {
      auto it = prev.find(key);
      if (it == prev.end()) {
        ++s.added;
      } else if (!(it->second == spec)) {
        ++s.replaced;
      }
    }
    for (const auto& [key, spec] : prev) {
      if (!now.contains(key)) ++s.removed;
    }
  }
  return s;
}

absl::StatusOr<ChangeSummary> Simulation::Inject(
    const SrPolicySafiUpdate& update) {
  if (scenario_.mode != AgentMode::kBgp) {
    return absl::FailedPreconditionError("inject needs bgp mode");
  }
  if (!scenario_.injector) {
    return absl::FailedPreconditionError("scenario declares no injector");
  }
  auto before = SnapshotDesired();
  if (auto s = bgp_->InjectPolicy(scenario_.injector->name, update,
                                  scenario_.injector->peers);
      !s.ok()) {
    return s;
  }
  if (auto s = Converge(); !s.ok()) return s;
  return Summarize(before);
}

absl::Status Simulation::InjectUnregistered(const std::string& peer,
                                            const SrPolicySafiUpdate& update) {
  if (scenario_.mode != AgentMode::kBgp) {
    return absl::FailedPreconditionError("inject needs bgp mode");
  }
  if (!bgp_->bus().HasPeer(peer)) {
    if (auto s = bgp_->AddExternalPeer(peer); !s.ok()) return s;
  }
  std::vector<std::string> targets;
  for (const NodeSpec& n : scenario_.nodes) targets.push_back(n.name);
  if (auto s = bgp_->InjectPolicy(peer, update, targets); !s.ok()) return s;
  return Converge();
}

absl::StatusOr<ChangeSummary> Simulation::ApplyConfigMap(
    absl::string_view text) {
  auto docs = ParseConfigMapStream(text);
  if (!docs.ok()) return docs.status();
  return ApplyConfigMapDocs(*docs);
}

absl::StatusOr<ChangeSummary> Simulation::ApplyConfigMapDocs(
    const std::vector<ConfigMapDoc>& docs) {
  if (scenario_.mode != AgentMode::kConfigMap) {
    return absl::FailedPreconditionError(
        "apply-configmap needs configmap mode");
  }
  for (const ConfigMapDoc& doc : docs) {
    if (scenario_.FindNode(doc.node) == nullptr) {
      return absl::NotFoundError(
          absl::StrCat("configmap for unknown node ", doc.node));
    }
    if (auto s = ValidateConfigMapDoc(doc); !s.ok()) return s;
  }
  auto before = SnapshotDesired();
  for (const ConfigMapDoc& doc : docs) {
    if (auto v = store_->Write(doc); !v.ok()) return v.status();
  }
  if (auto s = Converge(); !s.ok()) return s;
  return Summarize(before);
}

size_t Simulation::TunnelCount(Family family) const {
  size_t n = 0;
  for (const NodeSpec& node : scenario_.nodes) {
    const NodeDataplane& dp = *dataplanes_.at(node.name);
    std::set<V6Addr> steered;
    for (const auto& [prefix, bsid] : dp.steering().entries()) {
      steered.insert(bsid);
    }
    for (const auto& [bsid, policy] : dp.policies()) {
      if (policy.family == family && steered.contains(bsid)) ++n;
    }
  }
  return n;
}

std::string Simulation::DumpDataplanes() const {
  std::string out;
  for (const NodeSpec& n : scenario_.nodes) {
    absl::StrAppend(&out, "[", n.name, "]\n",
                    dataplanes_.at(n.name)->DumpState());
  }
  return out;
}

std::string Simulation::FormatEvents() const {
  std::string out;
  for (const AgentEvent& e : events_) {
    absl::StrAppend(&out, e.seq, " t=", e.time, " ", e.node, " ", e.kind, " ",
                    e.detail, "\n");
  }
  return out;
}

std::string Simulation::ReportJson() const {
  nlohmann::json localsids = nlohmann::json::object();
  nlohmann::json tunnels = nlohmann::json::object();
  for (const auto& [name, dp] : dataplanes_) {
    for (const auto& [sid, entry] : dp->localsids()) {
      localsids[name][sid.ToString()] = {{"behavior", entry.behavior.Name()},
                                         {"rx", entry.rx_counter}};
    }
    for (const auto& [bsid, policy] : dp->policies()) {
      tunnels[name][bsid.ToString()] = {
          {"family", std::string(FamilyName(policy.family))},
          {"tx", policy.tx_counter}};
    }
  }
  const BgpCounters& bgp = bgp_->counters();
  const CostMeter& meter = store_->meter();
  nlohmann::json pings = nlohmann::json::array();
  for (const PingReport& p : pings_) {
    nlohmann::json traces = nlohmann::json::array();
    for (const TraceRecord& t : p.traces) traces.push_back(TraceJson(t));
    pings.push_back({{"src", p.src},
                     {"dst", p.dst},
                     {"family", std::string(FamilyName(p.family))},
                     {"sent", p.sent},
                     {"delivered", p.delivered},
                     {"drops", p.drops},
                     {"trace", traces}});
  }
  nlohmann::json out = {
      {"scenario", scenario_.name},
      {"mode", std::string(ModeName(scenario_.mode))},
      {"seed", scenario_.seed},
      {"time", time_},
      {"steps", steps_},
      {"localsid_counters", localsids},
      {"tunnel_packets", tunnels},
      {"tunnels",
       {{"ipv4", TunnelCount(Family::kV4)},
        {"ipv6", TunnelCount(Family::kV6)}}},
      {"control_plane",
       {{"bgp_step1", bgp.step1},
        {"bgp_step2", bgp.step2},
        {"bgp_injects", bgp.injects},
        {"bgp_decode_errors", bgp.decode_errors},
        {"bus_deliveries", bgp_->bus().delivered()},
        {"configmap_polls", meter.polls},
        {"configmap_scan_units", meter.scans}}},
      {"pings", pings},
  };
  return out.dump(2) + "\n";
}

absl::StatusOr<std::string> RunBench(size_t n_packets,
                                     const std::vector<size_t>& batches) {
  BenchFixture fixture = MakeEncapBenchFixture();
  auto graph = BuildNodeGraph(*fixture.dataplane);
  if (!graph.ok()) return graph.status();
  std::vector<BenchRow> rows;
  for (size_t b : batches) {
    auto row = BenchDispatch(*graph, fixture.workload, n_packets, b);
    if (!row.ok()) return row.status();
    rows.push_back(*row);
  }
  return BenchCsv(rows);
}

}  // namespace srv6k8s
