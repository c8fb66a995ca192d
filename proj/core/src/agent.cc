// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

#include "srv6k8s/agent.h"

#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace srv6k8s {
namespace {

std::string KeyString(const PolicyKey& key) {
  return absl::StrCat(key.first.ToString(), "/", FamilyName(key.second));
}

std::string SpecString(const PolicySpec& spec) {
  std::vector<std::string> sids;
  for (const V6Addr& s : spec.segments) sids.push_back(s.ToString());
  return absl::StrCat("bsid ", spec.bsid.ToString(), " segments <",
                      absl::StrJoin(sids, " "), ">");
}

}  // namespace

absl::string_view ModeName(AgentMode mode) {
  return mode == AgentMode::kBgp ? "bgp" : "configmap";
}

absl::StatusOr<AgentMode> ParseMode(absl::string_view text) {
  if (text == "bgp") return AgentMode::kBgp;
  if (text == "configmap") return AgentMode::kConfigMap;
  return absl::InvalidArgumentError(
      absl::StrCat("mode '", text, "' is not bgp or configmap"));
}

absl::StatusOr<SegmentMode> ParseSegmentMode(absl::string_view text) {
  if (text == "double") return SegmentMode::kDouble;
  if (text == "single") return SegmentMode::kSingle;
  return absl::InvalidArgumentError(
      absl::StrCat("segment mode '", text, "' is not double or single"));
}

Agent::Agent(AgentConfig config, AgentContext context)
    : config_(std::move(config)), ctx_(std::move(context)) {}

BgpReceiver Agent::Receiver() {
  BgpReceiver r;
  r.on_step1 = [this](const std::string& from, const Step1Update& u) {
    OnStep1(from, u);
  };
  r.on_policy = [this](const std::string& from, bool external,
                       const SrPolicySafiUpdate& u) {
    OnPolicy(from, external, u);
  };
  r.on_decode_error = [this](const std::string& from, const absl::Status& s) {
    Log("decode-error", absl::StrCat("from ", from, ": ", s.message()));
  };
  return r;
}

void Agent::Log(std::string kind, std::string detail) {
  if (!ctx_.log) return;
  ctx_.log({.node = config_.node,
            .kind = std::move(kind),
            .detail = std::move(detail)});
}

std::optional<V6Addr> Agent::dt_sid(Family family) const {
  return family == Family::kV4 ? dt4_ : dt6_;
}

std::set<PolicyKey> Agent::pending() const {
  std::set<PolicyKey> out;
  for (const auto& [key, spec] : desired_) {
    if (!installed_.contains(key)) out.insert(key);
  }
  return out;
}

absl::StatusOr<V6Addr> Agent::AllocateV6(const std::string& pool) {
  if (ctx_.ipam == nullptr) {
    return absl::FailedPreconditionError("agent has no IPAM");
  }
  auto addr = ctx_.ipam->Allocate(pool, config_.node);
  if (!addr.ok()) return addr.status();
  if (const auto* v6 = std::get_if<V6Addr>(&*addr)) return *v6;
  return absl::InvalidArgumentError(
      absl::StrCat("ippool '", pool, "' is not an IPv6 pool"));
}

absl::Status Agent::SetDecapSid(Family family, const V6Addr& sid) {
  std::optional<V6Addr>& slot = family == Family::kV4 ? dt4_ : dt6_;
  if (slot == sid) return absl::OkStatus();
  NodeDataplane& dp = *ctx_.dataplane;
  if (slot) dp.RemoveLocalSid(*slot);
  if (auto s = dp.InstallLocalSid({sid, Behavior::EndDT(family), 0}); !s.ok()) {
    return s;
  }
  slot = sid;
  Log("localsid",
      absl::StrCat(Behavior::EndDT(family).Name(), " ", sid.ToString()));
  return absl::OkStatus();
}

absl::Status Agent::InstallLocalSids() {
  for (Family family : {Family::kV4, Family::kV6}) {
    if (dt_sid(family)) continue;
    bool has_pods = false;
    for (const Prefix& p : config_.pod_prefixes) {
      has_pods |= p.family() == family;
    }
    const std::optional<V6Addr>& fixed =
        family == Family::kV4 ? config_.static_dt4 : config_.static_dt6;
    if (!fixed && !has_pods) continue;
    V6Addr sid;
    if (fixed) {
      sid = *fixed;
    } else {
      auto allocated = AllocateV6(config_.localsid_pool);
      if (!allocated.ok()) {
        return absl::Status(allocated.status().code(),
                            absl::StrCat(config_.node, ": localsid: ",
                                         allocated.status().message()));
      }
      sid = *allocated;
    }
    if (auto s = SetDecapSid(family, sid); !s.ok()) return s;
  }
  return absl::OkStatus();
}

absl::Status Agent::OriginatePolicies() {
  for (Family family : {Family::kV4, Family::kV6}) {
    std::optional<V6Addr> dt = dt_sid(family);
    if (!dt) continue;
    auto bsid = AllocateV6(config_.bsid_pool);
    if (!bsid.ok()) {
      return absl::Status(
          bsid.status().code(),
          absl::StrCat(config_.node, ": bsid: ", bsid.status().message()));
    }
    std::vector<SegmentTypeB> segments;
    if (config_.segment_mode == SegmentMode::kDouble &&
        config_.attached_router_sid) {
      segments.push_back(
          {*config_.attached_router_sid, Behavior::End().code()});
    }
    segments.push_back({*dt, Behavior::EndDT(family).code()});
    SrPolicyNlri nlri{next_distinguisher_++, 0, config_.infra};
    auto update = MakeSrPolicyUpdate(nlri, *bsid, std::move(segments));
    if (!update.ok()) return update.status();
    if (auto s = ctx_.bgp->AdvertisePolicy(config_.node, *update); !s.ok()) {
      return s;
    }
  }
  return absl::OkStatus();
}

absl::Status Agent::Startup() {
  if (ctx_.dataplane == nullptr || ctx_.bgp == nullptr) {
    return absl::FailedPreconditionError(
        absl::StrCat(config_.node, ": agent needs a dataplane and BGP"));
  }
  if (config_.mode == AgentMode::kConfigMap && ctx_.store == nullptr) {
    return absl::FailedPreconditionError(
        absl::StrCat(config_.node, ": ConfigMap mode needs a store"));
  }
  ctx_.dataplane->SetEncapSource(config_.infra);
  if (config_.mode == AgentMode::kConfigMap) {
    watch_ = ctx_.store->WatchFor(config_.node);
    Poll();
  }
  if (auto s = InstallLocalSids(); !s.ok()) return s;
  for (const Prefix& p : config_.pod_prefixes) {
    if (auto s =
            ctx_.bgp->AdvertisePrefix(config_.node, {p, config_.infra, false});
        !s.ok()) {
      return s;
    }
  }
  if (config_.mode == AgentMode::kBgp && config_.originate_policies) {
    if (auto s = OriginatePolicies(); !s.ok()) return s;
  }
  return absl::OkStatus();
}

void Agent::OnStep1(const std::string& from, const Step1Update& u) {
  std::set<Prefix>& prefixes = prefix_map_[u.next_hop];
  bool changed = u.withdraw ? prefixes.erase(u.prefix) > 0
                            : prefixes.insert(u.prefix).second;
  if (prefixes.empty()) prefix_map_.erase(u.next_hop);
  if (!changed) return;
  Log(u.withdraw ? "step1-withdraw" : "step1",
      absl::StrCat(u.prefix.ToString(), " via ", u.next_hop.ToString(),
                   " from ", from));
  PolicyKey key{u.next_hop, u.prefix.family()};
  if (auto s = ReconcileAll({key}); !s.ok()) {
    Log("reconcile-error", std::string(s.message()));
  }
}

void Agent::OnPolicy(const std::string& from, bool external,
                     const SrPolicySafiUpdate& u) {
  if (config_.mode == AgentMode::kConfigMap) {
    Log("ignored", absl::StrCat("sr policy ", u.bsid.ToString(), " from ", from,
                                " in configmap mode"));
    return;
  }
  if (external && !config_.accepted_injectors.contains(from)) {
    Log("audit", absl::StrCat("rejected sr policy ", u.bsid.ToString(),
                              " from unregistered peer ", from));
    return;
  }
  if (u.nlri.endpoint == config_.infra) return;
  auto family = u.TrafficFamily();
  if (!family.ok()) {
    Log("rejected", std::string(family.status().message()));
    return;
  }
  PolicyKey key{u.nlri.endpoint, *family};
  auto before = desired_;
  if (u.withdraw) {
    if (desired_.erase(key) == 0) return;
  } else {
    PolicySpec spec{u.bsid, u.Sids()};
    auto it = desired_.find(key);
    if (it != desired_.end() && it->second == spec) return;
    desired_[key] = std::move(spec);
  }
  if (auto s = ReconcileAll({key}); !s.ok()) {
    desired_ = std::move(before);
    Log("rejected", absl::StrCat("sr policy ", u.bsid.ToString(), " from ",
                                 from, ": ", s.message()));
  }
}

absl::Status Agent::OnConfigMapChange(const ConfigMapDoc& doc) {
  if (doc.node != config_.node) {
    return absl::InvalidArgumentError(absl::StrCat(
        config_.node, ": configmap document is for node '", doc.node, "'"));
  }
  if (auto s = ValidateConfigMapDoc(doc); !s.ok()) return s;
  std::map<PolicyKey, PolicySpec> next;
  for (const CmPolicy& p : doc.policies) {
    if (p.egress_node == config_.infra) continue;
    next[KeyOf(p)] = PolicySpec{p.bsid, p.segment_list};
  }
  std::set<PolicyKey> keys;
  for (const auto& [k, v] : desired_) keys.insert(k);
  for (const auto& [k, v] : next) keys.insert(k);
  auto before = std::exchange(desired_, std::move(next));
  if (auto s = ReconcileAll(keys); !s.ok()) {
    desired_ = std::move(before);
    return s;
  }
  if (doc.dt4) {
    if (auto s = SetDecapSid(Family::kV4, *doc.dt4); !s.ok()) return s;
  }
  if (doc.dt6) {
    if (auto s = SetDecapSid(Family::kV6, *doc.dt6); !s.ok()) return s;
  }
  PolicyDiff diff = DiffPolicies(
      applied_doc_ ? applied_doc_->policies : std::vector<CmPolicy>{},
      doc.policies);
  Log("configmap",
      absl::StrCat(diff.added.size(), " added, ", diff.replaced.size(),
                   " replaced, ", diff.removed.size(), " removed"));
  applied_doc_ = doc;
  return absl::OkStatus();
}

bool Agent::Poll() {
  if (config_.mode != AgentMode::kConfigMap || ctx_.store == nullptr) {
    return false;
  }
  auto change = ctx_.store->PollFor(config_.node, watch_);
  if (!change.ok()) {
    Log("configmap-invalid", std::string(change.status().message()));
    return false;
  }
  if (!change->has_value()) return false;
  if (auto s = OnConfigMapChange((*change)->first); !s.ok()) {
    Log("configmap-invalid", std::string(s.message()));
    return false;
  }
  return true;
}

std::set<Prefix> Agent::SteeredPrefixes(const PolicyKey& key) const {
  std::set<Prefix> out;
  auto it = prefix_map_.find(key.first);
  if (it == prefix_map_.end()) return out;
  for (const Prefix& p : it->second) {
    if (p.family() == key.second) out.insert(p);
  }
  return out;
}

void Agent::Teardown(NodeDataplane& dp,
                     std::map<PolicyKey, InstalledPolicy>& installed,
                     const PolicyKey& key) {
  auto have = installed.find(key);
  if (have == installed.end()) return;
  for (const Prefix& p : have->second.steered) dp.RemoveSteering(p);
  // Nothing else steers into this BSID, so removal cannot fail.
  (void)dp.RemovePolicy(have->second.spec.bsid);
  installed.erase(have);
}

absl::Status Agent::Reconcile(NodeDataplane& dp,
                              std::map<PolicyKey, InstalledPolicy>& installed,
                              const PolicyKey& key) {
  auto want = desired_.find(key);
  std::set<Prefix> prefixes = SteeredPrefixes(key);
  if (want == desired_.end() || prefixes.empty()) {
    Teardown(dp, installed, key);
    return absl::OkStatus();
  }
  const PolicySpec& spec = want->second;
  for (const auto& [other, policy] : installed) {
    if (other != key && policy.spec.bsid == spec.bsid) {
      return absl::FailedPreconditionError(
          absl::StrCat("bsid ", spec.bsid.ToString(), " for ", KeyString(key),
                       " is already used for ", KeyString(other)));
    }
  }
  auto have = installed.find(key);
  if (have != installed.end() && have->second.spec.bsid != spec.bsid) {
    Teardown(dp, installed, key);
    have = installed.end();
  }
  if (auto s = dp.InstallPolicy({spec.bsid, spec.segments, key.second, 0});
      !s.ok()) {
    return s;
  }
  for (const Prefix& p : prefixes) {
    if (auto s = dp.InstallSteering({p, spec.bsid}); !s.ok()) return s;
  }
  if (have != installed.end()) {
    for (const Prefix& p : have->second.steered) {
      if (!prefixes.contains(p)) dp.RemoveSteering(p);
    }
  }
  installed[key] = InstalledPolicy{spec, std::move(prefixes)};
  return absl::OkStatus();
}

absl::Status Agent::ReconcileAll(const std::set<PolicyKey>& keys) {
  NodeDataplane staged = *ctx_.dataplane;
  std::map<PolicyKey, InstalledPolicy> installed = installed_;
  // Release BSIDs first so policies may trade them within one change.
  for (const PolicyKey& key : keys) {
    auto have = installed.find(key);
    if (have == installed.end()) continue;
    auto want = desired_.find(key);
    if (want == desired_.end() || SteeredPrefixes(key).empty() ||
        want->second.bsid != have->second.spec.bsid) {
      Teardown(staged, installed, key);
    }
  }
  for (const PolicyKey& key : keys) {
    if (auto s = Reconcile(staged, installed, key); !s.ok()) return s;
  }
  for (const PolicyKey& key : keys) {
    auto old_it = installed_.find(key);
    auto new_it = installed.find(key);
    bool had = old_it != installed_.end();
    bool has = new_it != installed.end();
    if (has && !had) {
      Log("policy-install",
          absl::StrCat(KeyString(key), " ", SpecString(new_it->second.spec)));
    } else if (has && !(old_it->second == new_it->second)) {
      Log("policy-replace",
          absl::StrCat(KeyString(key), " ", SpecString(new_it->second.spec)));
    } else if (had && !has) {
      Log("policy-remove", KeyString(key));
    }
    if (!has && desired_.contains(key)) {
      Log("policy-pending", KeyString(key));
    }
  }
  *ctx_.dataplane = std::move(staged);
  installed_ = std::move(installed);
  return absl::OkStatus();
}

}  // namespace srv6k8s
