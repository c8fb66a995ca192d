// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "srv6k8s/bgp_control.h"
#include "srv6k8s/graph_engine.h"
#include "srv6k8s/k8s_control.h"
#include "srv6k8s/net_types.h"
#include "srv6k8s/scenario.h"
#include "srv6k8s/simulation.h"
#include "srv6k8s/sr_dataplane.h"

namespace srv6k8s {
namespace {

// Collects failures for one criterion.
class Check {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ |= !ok;
  }
  bool failed() const { return failed_; }
  std::string Detail() const { return absl::StrJoin(failures_, "; "); }

 private:
  bool failed_ = false;
  std::vector<std::string> failures_;
};

std::string Src(const std::string& rel) {
  return std::string(SRV6K8S_SOURCE_DIR) + "/" + rel;
}

V6Addr V6(const char* text) { return V6Addr::MustParse(text); }

V6Addr RandomV6(std::mt19937_64& rng) {
  V6Addr::Bytes b;
  for (auto& x : b) x = static_cast<uint8_t>(rng());
  return V6Addr(b);
}

InnerPacket RandomInner(std::mt19937_64& rng) {
  InnerPacket p;
  p.family = rng() % 2 ? Family::kV4 : Family::kV6;
  if (p.family == Family::kV4) {
    p.src = V4Addr(static_cast<uint32_t>(rng()));
    p.dst = V4Addr(static_cast<uint32_t>(rng()));
  } else {
    p.src = RandomV6(rng);
    p.dst = RandomV6(rng);
  }
  p.hop_limit = static_cast<uint8_t>(1 + rng() % 255);
  p.payload.resize(rng() % 200);
  for (auto& x : p.payload) x = static_cast<uint8_t>(rng());
  return p;
}

std::unique_ptr<Simulation> LoadSim(const std::string& file, Check& c,
                                    std::optional<uint64_t> seed = {},
                                    std::optional<AgentMode> mode = {}) {
  auto sc = LoadScenarioFile(Src("scenarios/" + file));
  if (!sc.ok()) {
    c.Expect(false, std::string(sc.status().message()));
    return nullptr;
  }
  if (seed) sc->seed = *seed;
  if (mode) sc->mode = *mode;
  auto sim = Simulation::Create(*std::move(sc));
  if (!sim.ok()) {
    c.Expect(false, std::string(sim.status().message()));
    return nullptr;
  }
  return *std::move(sim);
}

std::vector<SrPolicySafiUpdate> TestbedPolicies(Check& c) {
  std::vector<SrPolicySafiUpdate> out;
  for (const char* f : {"master-ipv4", "master-ipv6", "worker1-ipv4",
                        "worker1-ipv6", "worker2-ipv4", "worker2-ipv6"}) {
    auto text =
        ReadTextFile(Src(std::string("scenarios/policies/") + f + ".yaml"));
    auto u = text.ok() ? ParsePolicyFile(*text)
                       : absl::StatusOr<SrPolicySafiUpdate>(text.status());
    c.Expect(u.ok(), absl::StrCat(f, ": ", u.status().message()));
    if (u.ok()) out.push_back(*u);
  }
  return out;
}

// 1. SRH codec.
Check SrhCodec() {
  Check c;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    size_t n = 1 + rng() % 20;
    std::vector<V6Addr> list(n);
    for (auto& s : list) s = RandomV6(rng);
    auto srh = Srh::Make(
        static_cast<uint8_t>(rng()), list, static_cast<uint8_t>(rng() % n),
        static_cast<uint8_t>(rng()), static_cast<uint16_t>(rng()));
    if (!srh.ok()) {
      c.Expect(false, std::string(srh.status().message()));
      continue;
    }
    std::vector<uint8_t> bytes = EncodeSrh(*srh);
    c.Expect(bytes.size() == 8 + 16 * n, absl::StrCat("size law n=", n));
    auto back = DecodeSrh(bytes);
    c.Expect(back.ok() && *back == *srh && EncodeSrh(*back) == bytes,
             absl::StrCat("round trip ", i));
  }
  NodeDataplane head;
  head.SetEncapSource(V6("fd12::1000"));
  V6Addr dt = V6("fcdd::11aa:c11:b42f:f17e:a682");
  for (int i = 0; i < 1000; ++i) {
    InnerPacket inner = RandomInner(rng);
    Family f = inner.family;
    head.InstallPolicy({V6("cafe::1"), {dt}, f, 0}).IgnoreError();
    head.InstallPolicy({V6("cafe::2"), {V6("fcff:3::1"), dt}, f, 0})
        .IgnoreError();
    auto one = head.HEncaps(inner, V6("cafe::1"));
    auto two = head.HEncaps(inner, V6("cafe::2"));
    c.Expect(one.ok() && two.ok() &&
                 EncodeOuter(*two).size() - EncodeOuter(*one).size() == 16,
             "single vs double segment difference");
  }
  return c;
}

// 2. The three-segment example.
Check ThreeSegmentExample() {
  Check c;
  V6Addr s1 = V6("fcff:1::1"), s2 = V6("fcff:2::1"), s3 = V6("fcff:3::1");
  NodeDataplane head, first;
  head.SetEncapSource(V6("fd10::1000"));
  c.Expect(
      head.InstallPolicy({V6("cafe::1"), {s1, s2, s3}, Family::kV6, 0}).ok(),
      "install");
  c.Expect(first.InstallLocalSid({s1, Behavior::End(), 0}).ok(), "sid");
  InnerPacket inner;
  inner.family = Family::kV6;
  inner.src = V6("fd20:0:0:10::");
  inner.dst = V6("fd20:0:0:11::");
  auto outer = head.HEncaps(inner, V6("cafe::1"));
  if (!outer.ok() || !outer->srh) {
    c.Expect(false, "encap failed");
    return c;
  }
  c.Expect(outer->srh->segment_list() == std::vector<V6Addr>{s3, s2, s1},
           "stored order <S3,S2,S1>");
  c.Expect(outer->srh->segments_left() == 2, "initial SL 2");
  c.Expect(outer->dst == s1, "initial dst S1");
  Disposition d = first.ProcessLocal(*outer);
  const auto* fwd = std::get_if<Forward>(&d);
  c.Expect(fwd != nullptr, "End forwards");
  if (fwd) {
    c.Expect(fwd->packet.srh->segments_left() == 1, "SL 1 after End");
    c.Expect(fwd->packet.dst == s2, "dst S2 after End");
  }
  return c;
}

// 3. Encap, k-1 End steps, DT decap returns the inner bytes.
Check Inversion() {
  Check c;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    InnerPacket inner = RandomInner(rng);
    size_t k = 1 + rng() % 5;
    std::vector<V6Addr> path(k);
    for (auto& s : path) s = RandomV6(rng);
    std::vector<NodeDataplane> hops(k);
    for (size_t i = 0; i + 1 < k; ++i) {
      hops[i].InstallLocalSid({path[i], Behavior::End(), 0}).IgnoreError();
    }
    hops[k - 1]
        .InstallLocalSid({path[k - 1], Behavior::EndDT(inner.family), 0})
        .IgnoreError();
    hops[k - 1].AddTenantRoute(0, Prefix::HostRoute(inner.dst), "pod");
    NodeDataplane head;
    head.SetEncapSource(RandomV6(rng));
    head.InstallPolicy({V6("cafe::1"), path, inner.family, 0}).IgnoreError();
    auto outer = head.HEncaps(inner, V6("cafe::1"));
    if (!outer.ok()) {
      c.Expect(false, std::string(outer.status().message()));
      continue;
    }
    // Each hop sees the wire bytes of the previous one.
    std::vector<uint8_t> wire = EncodeOuter(*outer);
    bool ok = true;
    for (size_t i = 0; i < k && ok; ++i) {
      auto pkt = DecodeOuter(wire);
      if (!pkt.ok()) {
        ok = false;
        break;
      }
      Disposition d = hops[i].ProcessLocal(*pkt);
      if (i + 1 < k) {
        const auto* fwd = std::get_if<Forward>(&d);
        ok = fwd != nullptr;
        if (ok) wire = EncodeOuter(fwd->packet);
      } else {
        const auto* del = std::get_if<Deliver>(&d);
        ok = del != nullptr && EncodeInner(del->packet) == EncodeInner(inner);
      }
    }
    c.Expect(ok, absl::StrCat("trial ", trial, " k=", k));
  }
  return c;
}

// 4. SAFI 73 round trip and mutation fuzz.
Check Safi73() {
  Check c;
  auto text = ReadTextFile(Src("scenarios/policies/worker2-ipv4.yaml"));
  auto u = text.ok() ? ParsePolicyFile(*text)
                     : absl::StatusOr<SrPolicySafiUpdate>(text.status());
  if (!u.ok()) {
    c.Expect(false, std::string(u.status().message()));
    return c;
  }
  c.Expect(u->nlri.endpoint == V6("fd12::1000") && u->bsid == V6("cafe::4"),
           "endpoint and bsid");
  std::vector<SegmentTypeB> want = {{V6("fcff:5::1"), 19},
                                    {V6("fcff:7::1"), 19},
                                    {V6("fcff:8::1"), 19},
                                    {V6("fcdd::12aa:d460:b250:45:b04"), 19}};
  c.Expect(u->segments == want, "segments and behaviors");
  auto bytes = EncodeSafi73(*u);
  auto back = bytes.ok() ? DecodeSafi73(*bytes)
                         : absl::StatusOr<SrPolicySafiUpdate>(bytes.status());
  c.Expect(back.ok() && *back == *u, "field-for-field round trip");
  if (!bytes.ok()) return c;
  std::mt19937_64 rng(4);
  size_t accepted = 0;
  for (int i = 0; i < 100000; ++i) {
    std::vector<uint8_t> m = *bytes;
    int edits = 1 + static_cast<int>(rng() % 3);
    for (int e = 0; e < edits && !m.empty(); ++e) {
      switch (rng() % 4) {
        case 0:
          m[rng() % m.size()] ^= static_cast<uint8_t>(1u << (rng() % 8));
          break;
        case 1:
          m[rng() % m.size()] = static_cast<uint8_t>(rng());
          break;
        case 2:
          m.resize(rng() % m.size());
          break;
        default:
          m.insert(m.begin() + static_cast<long>(rng() % m.size()),
                   static_cast<uint8_t>(rng()));
      }
    }
    auto d = DecodeSafi73(m);
    if (!d.ok()) continue;
    ++accepted;
    auto again = EncodeSafi73(*d);
    c.Expect(again.ok() && *again == m, absl::StrCat("re-encode ", i));
  }
  return c;
}

// 5. basic converges to N(N-1) tunnels per family under any interleaving.
Check Convergence() {
  Check c;
  std::string reference;
  size_t pending_runs = 0;
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    auto sim = LoadSim("basic.scn", c, seed);
    if (!sim) return c;
    c.Expect(sim->TunnelCount(Family::kV4) == 6 &&
                 sim->TunnelCount(Family::kV6) == 6,
             absl::StrCat("seed ", seed, " tunnel count"));
    std::string dump = sim->DumpDataplanes();
    if (seed == 1) reference = dump;
    c.Expect(dump == reference, absl::StrCat("seed ", seed, " state differs"));
    for (const AgentEvent& e : sim->events()) {
      if (e.kind == "policy-pending") {
        ++pending_runs;
        break;
      }
    }
  }
  c.Expect(pending_runs > 0, "no interleaving delivered step 2 first");
  std::cout << "  step-2-before-step-1 seen in " << pending_runs
            << " of 50 runs\n";
  return c;
}

// 6. TE rewiring.
Check Rewiring() {
  Check c;
  auto sim = LoadSim("full.scn", c);
  if (!sim) return c;
  auto before = sim->Trace("busybox-worker2", "busybox-worker1", Family::kV6);
  c.Expect(before.ok() && before->ok() &&
               Waypoints(*before) == std::vector<std::string>{"R4", "R3"},
           "initial waypoints");
  auto text = ReadTextFile(Src("scenarios/configmap-modified.yaml"));
  auto applied = text.ok() ? sim->ApplyConfigMap(*text)
                           : absl::StatusOr<ChangeSummary>(text.status());
  c.Expect(applied.ok(), "apply modified document");
  auto after = sim->Trace("busybox-worker2", "busybox-worker1", Family::kV6);
  c.Expect(after.ok() && after->ok() &&
               Waypoints(*after) == std::vector<std::string>{"R7", "R2", "R3"},
           "modified waypoints");
  return c;
}

// 7. BGP testbed: nothing before injection, everything after.
Check BgpTestbed() {
  Check c;
  auto sim = LoadSim("full-bgp.scn", c);
  if (!sim) return c;
  const std::vector<PodSpec>& pods = sim->scenario().pods;
  auto all_pairs = [&](size_t count,
                       const std::function<void(const PingReport&)>& check) {
    for (const PodSpec& a : pods) {
      for (const PodSpec& b : pods) {
        if (a.name == b.name) continue;
        for (Family f : {Family::kV4, Family::kV6}) {
          auto r = sim->Ping(a.name, b.name, count, f);
          c.Expect(r.ok(), absl::StrCat(a.name, "->", b.name));
          if (r.ok()) check(*r);
        }
      }
    }
  };
  all_pairs(2, [&](const PingReport& r) {
    c.Expect(r.delivered == 0, absl::StrCat("before: ", r.src, "->", r.dst,
                                            " delivered ", r.delivered));
  });
  for (const SrPolicySafiUpdate& u : TestbedPolicies(c)) {
    c.Expect(sim->Inject(u).ok(), "inject");
  }
  // DT counters before the second round, to compare deltas.
  auto dt_total = [&]() {
    std::map<std::string, uint64_t> out;
    for (const NodeSpec& n : sim->scenario().nodes) {
      for (const auto& [sid, e] : sim->dataplane(n.name)->localsids()) {
        if (e.behavior == Behavior::EndDT4() ||
            e.behavior == Behavior::EndDT6()) {
          out[n.name] += e.rx_counter;
        }
      }
    }
    return out;
  };
  std::map<std::string, uint64_t> base = dt_total();
  std::map<std::string, uint64_t> delivered;
  all_pairs(4, [&](const PingReport& r) {
    c.Expect(r.delivered == r.sent,
             absl::StrCat("after: ", r.src, "->", r.dst, " delivered ",
                          r.delivered, "/", r.sent));
    delivered[sim->scenario().FindPod(r.dst)->node] += r.delivered;
  });
  std::map<std::string, uint64_t> now = dt_total();
  for (const NodeSpec& n : sim->scenario().nodes) {
    c.Expect(now[n.name] - base[n.name] == delivered[n.name],
             absl::StrCat(n.name, " DT counter ", now[n.name] - base[n.name],
                          " vs delivered ", delivered[n.name]));
  }
  return c;
}

// 8. The injected policy set reaches the same dataplanes through ConfigMaps.
Check ModeEquivalence() {
  Check c;
  auto bgp = LoadSim("full-bgp.scn", c);
  auto cm = LoadSim("full-bgp.scn", c, std::nullopt, AgentMode::kConfigMap);
  if (!bgp || !cm) return c;
  std::vector<SrPolicySafiUpdate> policies = TestbedPolicies(c);
  for (const SrPolicySafiUpdate& u : policies) {
    c.Expect(bgp->Inject(u).ok(), "inject");
  }
  std::vector<ConfigMapDoc> docs;
  for (const NodeSpec& n : cm->scenario().nodes) {
    ConfigMapDoc doc;
    doc.node = n.name;
    for (const SrPolicySafiUpdate& u : policies) {
      if (u.nlri.endpoint == n.infra) continue;
      doc.policies.push_back(
          {u.nlri.endpoint, u.bsid, u.Sids(), *u.TrafficFamily()});
    }
    docs.push_back(doc);
  }
  auto applied = cm->ApplyConfigMapDocs(docs);
  c.Expect(applied.ok(), absl::StrCat("apply: ", applied.status().message()));
  c.Expect(
      bgp->TunnelCount(Family::kV4) == 6 && bgp->TunnelCount(Family::kV6) == 6,
      "bgp tunnels");
  c.Expect(bgp->DumpDataplanes() == cm->DumpDataplanes(), "dumps differ");
  return c;
}

// 9. Scan units for W changes on N nodes under each layout.
Check FanOut() {
  Check c;
  const int kNodes = 5;
  const int kWrites = 20;
  std::map<ConfigMapLayout, uint64_t> scans;
  for (ConfigMapLayout layout :
       {ConfigMapLayout::kSingleMap, ConfigMapLayout::kPerNode}) {
    std::string text = absl::StrCat(
        "name: fanout\nmode: configmap\nconfigmap_layout: ", LayoutName(layout),
        "\nrouters:\n  - id: R1\nnodes:\n");
    for (int i = 1; i <= kNodes; ++i) {
      absl::StrAppend(&text, "  - name: n", i, "\n    infra: fd0", i,
                      "::1000\n    router: R1\n    pod_prefixes: [10.", i,
                      ".0.0/24]\n    localsids:\n      DT4: \"fcdd::", i,
                      ":4\"\n");
    }
    auto sc = ParseScenario(text, Src("scenarios"), "fanout");
    c.Expect(sc.ok(), std::string(sc.status().message()));
    if (!sc.ok()) return c;
    auto sim = Simulation::Create(*std::move(sc));
    c.Expect(sim.ok(), std::string(sim.status().message()));
    if (!sim.ok()) return c;
    uint64_t start = (*sim)->configmap_meter().scans;
    for (int w = 1; w <= kWrites; ++w) {
      ConfigMapDoc doc;
      doc.node = "n1";
      doc.policies.push_back({V6("fd02::1000"),
                              V6("cafe::").Plus(w),
                              {V6("fcdd::2:4")},
                              Family::kV4});
      auto s = (*sim)->ApplyConfigMapDocs({doc});
      c.Expect(s.ok() && s->added + s->replaced == 1,
               absl::StrCat("write ", w));
    }
    scans[layout] = (*sim)->configmap_meter().scans - start;
  }
  std::cout << "  scan units: single-map " << scans[ConfigMapLayout::kSingleMap]
            << ", per-node " << scans[ConfigMapLayout::kPerNode] << "\n";
  c.Expect(scans[ConfigMapLayout::kSingleMap] == kNodes * kWrites,
           "single-map scans");
  c.Expect(scans[ConfigMapLayout::kPerNode] == kWrites, "per-node scans");
  return c;
}

// 10. Vector dispatch equals scalar dispatch.
Check VectorOracle() {
  Check c;
  NodeDataplane dp("worker2");
  dp.SetEncapSource(V6("fd12::1000"));
  dp.InstallPolicy(
        {V6("cafe::1c2"), {V6("fcff:4::1"), V6("fcdd::a682")}, Family::kV4, 0})
      .IgnoreError();
  dp.InstallPolicy(
        {V6("cafe::1c3"), {V6("fcff:4::1"), V6("fcdd::a683")}, Family::kV6, 0})
      .IgnoreError();
  dp.InstallSteering({*Prefix::Parse("172.16.104.0/26"), V6("cafe::1c2")})
      .IgnoreError();
  dp.InstallSteering({*Prefix::Parse("fd20:0:0:11::/64"), V6("cafe::1c3")})
      .IgnoreError();
  dp.InstallLocalSid({V6("fcff:8::1"), Behavior::End(), 0}).IgnoreError();
  dp.InstallLocalSid({V6("fcdd::b04"), Behavior::EndDT4(), 0}).IgnoreError();
  dp.AddRoute(*Prefix::Parse("fcff:4::/32"), {"L04", "R4"});
  dp.AddRoute(*Prefix::Parse("fcff:3::/32"), {"L04", "R4"});
  dp.AddTenantRoute(0, *Prefix::Parse("172.16.104.64/32"), "pod-local");

  std::mt19937_64 rng(10);
  auto random_item = [&]() {
    WorkItem item;
    InnerPacket inner = RandomInner(rng);
    switch (rng() % 5) {
      case 0:
        inner.family = Family::kV4;
        inner.src = V4Addr(static_cast<uint32_t>(rng()));
        inner.dst = V4Addr(V4Addr::Parse("172.16.104.0")->bits() + rng() % 70);
        item.packet = inner;
        break;
      case 1:
        inner.family = Family::kV6;
        inner.src = RandomV6(rng);
        inner.dst = V6("fd20:0:0:11::").Plus(rng() % 100);
        item.packet = inner;
        break;
      case 2: {
        OuterPacket o;
        o.src = V6("fd10::1000");
        o.srh = *Srh::Make(kProtoIpv4, {V6("fcdd::a682"), V6("fcff:8::1")}, 1);
        o.next_header = kProtoRouting;
        o.dst = rng() % 4 ? V6("fcff:8::1") : V6("fcff:9::1");
        inner.family = Family::kV4;
        inner.src = V4Addr(static_cast<uint32_t>(rng()));
        inner.dst = V4Addr(static_cast<uint32_t>(rng()));
        o.inner = EncodeInner(inner);
        item.packet = o;
        break;
      }
      case 3: {
        OuterPacket o;
        o.src = V6("fd10::1000");
        o.srh = *Srh::Make(kProtoIpv4, {V6("fcdd::b04")}, 0);
        o.next_header = kProtoRouting;
        o.dst = V6("fcdd::b04");
        inner.family = Family::kV4;
        inner.src = V4Addr(static_cast<uint32_t>(rng()));
        inner.dst = rng() % 2 ? V4Addr(V4Addr::Parse("172.16.104.64")->bits())
                              : V4Addr(static_cast<uint32_t>(rng()));
        o.inner = EncodeInner(inner);
        item.packet = o;
        break;
      }
      default:
        item.packet = inner;
    }
    return item;
  };

  for (bool memo : {false, true}) {
    auto graph = BuildNodeGraph(dp, {.memoize_steering = memo});
    if (!graph.ok()) {
      c.Expect(false, std::string(graph.status().message()));
      return c;
    }
    for (int v = 0; v < 500; ++v) {
      std::vector<WorkItem> items(1 + rng() % kMaxVectorSize);
      for (auto& it : items) it = random_item();
      std::vector<TerminalDisposition> scalar;
      for (const WorkItem& it : items) {
        auto d = graph->RunScalar(it);
        if (d.ok()) scalar.push_back(*d);
      }
      auto vec = graph->RunVector(items);
      if (!vec.ok() || vec->size() != scalar.size()) {
        c.Expect(false, absl::StrCat("vector ", v, " failed"));
        continue;
      }
      std::multiset<std::pair<int, std::string>> ms, mv;
      bool same = true;
      for (size_t i = 0; i < scalar.size(); ++i) {
        ms.insert({static_cast<int>(scalar[i].kind), scalar[i].detail});
        mv.insert({static_cast<int>((*vec)[i].kind), (*vec)[i].detail});
        same &= scalar[i].bytes == (*vec)[i].bytes &&
                scalar[i].kind == (*vec)[i].kind;
      }
      c.Expect(ms == mv && same, absl::StrCat("vector ", v, " differs"));
    }
  }
  return c;
}

// 11. IPAM.
Check Ipam11() {
  Check c;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Ipam ipam;
    auto open = MakePool("open", *Prefix::Parse("fd00::/120"), 124, "");
    auto only_a = MakePool("only-a", *Prefix::Parse("10.0.0.0/24"), 28,
                           "kubernetes.io/hostname == 'a'");
    c.Expect(open.ok() && only_a.ok(), "pools");
    if (!open.ok() || !only_a.ok()) return c;
    c.Expect(ipam.AddPool(*open).ok() && ipam.AddPool(*only_a).ok(), "add");
    for (const IpPool& pool : {*open, *only_a}) {
      std::set<IpAddress> seen;
      std::map<uint64_t, std::string> block_owner;
      std::set<std::string> exhausted;
      const uint64_t per_block = uint64_t{1}
                                 << (pool.cidr.family() == Family::kV4
                                         ? 32 - pool.block_size
                                         : 128 - pool.block_size);
      for (int i = 0; i < 5000; ++i) {
        std::string node(1, static_cast<char>('a' + rng() % 3));
        auto a = ipam.Allocate(pool.name, node);
        if (!pool.Selects(node)) {
          c.Expect(a.status().code() == absl::StatusCode::kPermissionDenied,
                   "selector not enforced");
          continue;
        }
        if (!a.ok()) {
          c.Expect(a.status().code() == absl::StatusCode::kResourceExhausted,
                   std::string(a.status().message()));
          exhausted.insert(node);
          continue;
        }
        c.Expect(!exhausted.contains(node), "allocation after exhaustion");
        c.Expect(*pool.cidr.Contains(*a), "outside cidr");
        c.Expect(seen.insert(*a).second, "duplicate address");
        // Offset of the address within the pool.
        uint64_t offset = 0;
        if (const auto* v4 = std::get_if<V4Addr>(&*a)) {
          offset = v4->bits() - std::get<V4Addr>(pool.cidr.base()).bits();
        } else {
          offset = std::get<V6Addr>(*a).bytes()[15];
        }
        auto [it, fresh] = block_owner.emplace(offset / per_block, node);
        c.Expect(fresh || it->second == node, "shared block");
      }
      c.Expect(seen.size() == 256 && !exhausted.empty(),
               absl::StrCat(pool.name, ": ", seen.size(), " of 256 allocated"));
    }
  }
  for (const char* f :
       {"scenarios/ippools.yaml", "scenarios/ippools-te.yaml"}) {
    auto text = ReadTextFile(Src(f));
    auto pools = text.ok() ? ParseIpPools(*text)
                           : absl::StatusOr<std::vector<IpPool>>(text.status());
    c.Expect(pools.ok() && pools->size() == 4, absl::StrCat(f, " load"));
    if (!pools.ok()) continue;
    Ipam ipam;
    for (const IpPool& p : *pools) c.Expect(ipam.AddPool(p).ok(), p.name);
    auto bsid = ipam.Allocate("sr-policies-pool", "master");
    c.Expect(bsid.ok() && *bsid == IpAddress(V6("cafe::")), "first bsid");
    for (const IpPool& p : *pools) {
      if (p.name == "sr-policies-pool") continue;
      std::string node = p.node_selector.substr(p.node_selector.find('\'') + 1);
      node.pop_back();
      auto a = ipam.Allocate(p.name, node);
      c.Expect(a.ok() && *p.cidr.Contains(*a), p.name);
    }
  }
  return c;
}

struct Criterion {
  int number;
  const char* name;
  double limit_seconds;  // 0: no runtime bound
  std::function<Check()> run;
};

int Main() {
  const std::vector<Criterion> criteria = {
      {1, "SRH codec", 5, SrhCodec},
      {2, "three-segment example", 0, ThreeSegmentExample},
      {3, "encap/decap inversion", 0, Inversion},
      {4, "SAFI 73 codec", 30, Safi73},
      {5, "convergence", 0, Convergence},
      {6, "TE rewiring", 10, Rewiring},
      {7, "BGP testbed reproduction", 0, BgpTestbed},
      {8, "mode equivalence", 0, ModeEquivalence},
      {9, "fan-out law", 0, FanOut},
      {10, "vector/scalar oracle", 0, VectorOracle},
      {11, "IPAM", 0, Ipam11},
  };
  int failed = 0;
  for (const Criterion& cr : criteria) {
    auto start = std::chrono::steady_clock::now();
    Check c = cr.run();
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (cr.limit_seconds > 0 && secs >= cr.limit_seconds) {
      c.Expect(false, absl::StrCat("runtime ", secs, " s over ",
                                   cr.limit_seconds, " s"));
    }
    failed += c.failed();
    char time_text[32];
    std::snprintf(time_text, sizeof(time_text), "%.2f", secs);
    std::cout << "criterion " << cr.number << ": "
              << (c.failed() ? "FAIL" : "PASS") << " " << cr.name << " ("
              << time_text << " s)";
    if (c.failed()) std::cout << ": " << c.Detail();
    std::cout << "\n";
  }
  std::cout << (failed == 0 ? "all criteria passed" : "criteria failed: ")
            << (failed == 0 ? "" : std::to_string(failed)) << "\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace srv6k8s

int main() { return srv6k8s::Main(); }
