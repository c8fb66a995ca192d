// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

#include "srv6k8s/sr_dataplane.h"

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace srv6k8s {
namespace {

std::string JoinSids(const std::vector<V6Addr>& sids) {
  return absl::StrJoin(sids, " ", [](std::string* out, const V6Addr& a) {
    out->append(a.ToString());
  });
}

}  // namespace

uint16_t Behavior::code() const {
  switch (kind) {
    case Kind::kEnd:
      return 1;
    case Kind::kEndX:
      return 5;
    case Kind::kEndDT6:
      return 18;
    case Kind::kEndDT4:
      return 19;
  }
  return 0;
}

std::string Behavior::Name() const {
  switch (kind) {
    case Kind::kEnd:
      return "End";
    case Kind::kEndX:
      return "End.X";
    case Kind::kEndDT4:
      return "End.DT4";
    case Kind::kEndDT6:
      return "End.DT6";
  }
  return "?";
}

absl::Status NodeDataplane::InstallLocalSid(const LocalSidEntry& entry) {
  auto it = localsids_.find(entry.sid);
  if (it != localsids_.end()) {
    if (it->second.behavior == entry.behavior) return absl::OkStatus();
    it->second = LocalSidEntry{entry.sid, entry.behavior, 0};
  } else {
    localsids_.emplace(entry.sid, LocalSidEntry{entry.sid, entry.behavior, 0});
  }
  ++generation_;
  return absl::OkStatus();
}

bool NodeDataplane::RemoveLocalSid(const V6Addr& sid) {
  if (localsids_.erase(sid) == 0) return false;
  ++generation_;
  return true;
}

absl::Status NodeDataplane::InstallPolicy(const SrPolicyEntry& entry) {
  if (entry.segments.empty()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "policy ", entry.bsid.ToString(), " has an empty segment list"));
  }
  if (entry.segments.size() > kMaxSrhSegments) {
    return absl::InvalidArgumentError(absl::StrCat(
        "policy ", entry.bsid.ToString(), " has too many segments"));
  }
  auto it = policies_.find(entry.bsid);
  if (it == policies_.end()) {
    policies_.emplace(entry.bsid,
                      SrPolicyEntry{entry.bsid, entry.segments, entry.family});
    ++generation_;
    return absl::OkStatus();
  }
  SrPolicyEntry& current = it->second;
  if (current.segments == entry.segments && current.family == entry.family) {
    return absl::OkStatus();
  }
  if (current.family != entry.family) {
    for (const auto& [match, bsid] : steering_.entries()) {
      if (bsid == entry.bsid) {
        return absl::FailedPreconditionError(absl::StrCat(
            "policy ", entry.bsid.ToString(), " changes family while ",
            match.ToString(), " steers into it"));
      }
    }
  }
  current.segments = entry.segments;
  current.family = entry.family;
  ++generation_;
  return absl::OkStatus();
}

absl::Status NodeDataplane::RemovePolicy(const V6Addr& bsid) {
  for (const auto& [match, target] : steering_.entries()) {
    if (target == bsid) {
      return absl::FailedPreconditionError(absl::StrCat(
          "policy ", bsid.ToString(), " still steered by ", match.ToString()));
    }
  }
  if (policies_.erase(bsid) == 0) {
    return absl::NotFoundError(
        absl::StrCat("no policy with bsid ", bsid.ToString()));
  }
  ++generation_;
  return absl::OkStatus();
}

absl::Status NodeDataplane::InstallSteering(const SteeringRule& rule) {
  const SrPolicyEntry* policy = FindPolicy(rule.bsid);
  if (policy == nullptr) {
    return absl::NotFoundError(
        absl::StrCat("dangling policy: steering ", rule.match.ToString(),
                     " references unknown bsid ", rule.bsid.ToString()));
  }
  if (policy->family != rule.match.family()) {
    return absl::FailedPreconditionError(
        absl::StrCat("dangling policy: bsid ", rule.bsid.ToString(),
                     " carries ", FamilyName(policy->family),
                     " traffic, steering prefix is ", rule.match.ToString()));
  }
  if (steering_.Insert(rule.match, rule.bsid)) ++generation_;
  return absl::OkStatus();
}

bool NodeDataplane::RemoveSteering(const Prefix& match) {
  if (!steering_.Erase(match)) return false;
  ++generation_;
  return true;
}

void NodeDataplane::SetEncapSource(const V6Addr& addr) {
  if (encap_source_ == addr) return;
  encap_source_ = addr;
  ++generation_;
}

void NodeDataplane::AddRoute(const Prefix& prefix, const NextHop& via) {
  fib_.Insert(prefix, via);
}

void NodeDataplane::ClearRoutes() { fib_.Clear(); }

void NodeDataplane::AddTenantRoute(uint32_t table_id, const Prefix& prefix,
                                   const std::string& egress) {
  tenant_tables_[table_id].Insert(prefix, egress);
}

std::optional<V6Addr> NodeDataplane::SteerLookup(const IpAddress& dst) const {
  auto hit = steering_.Lookup(dst);
  if (!hit) return std::nullopt;
  return hit->second;
}

std::optional<SteeringRule> NodeDataplane::SteerMatch(
    const IpAddress& dst) const {
  auto hit = steering_.Lookup(dst);
  if (!hit) return std::nullopt;
  return SteeringRule{hit->first, hit->second};
}

absl::StatusOr<OuterPacket> NodeDataplane::HEncaps(const InnerPacket& inner,
                                                   const V6Addr& bsid) {
  auto it = policies_.find(bsid);
  if (it == policies_.end()) {
    return absl::NotFoundError(absl::StrCat("unknown bsid ", bsid.ToString()));
  }
  SrPolicyEntry& policy = it->second;
  if (!encap_source_) {
    return absl::FailedPreconditionError(
        absl::StrCat(name_, ": encap source not configured"));
  }
  if (inner.family != policy.family) {
    return absl::InvalidArgumentError(absl::StrCat(
        "family mismatch: ", FamilyName(inner.family), " packet into ",
        FamilyName(policy.family), " policy ", bsid.ToString()));
  }
  if (absl::Status s = ValidateInner(inner); !s.ok()) return s;
  auto srh = Srh::ForPath(InnerProtocol(inner.family), policy.segments);
  if (!srh.ok()) return srh.status();

  OuterPacket outer;
  outer.src = *encap_source_;
  outer.dst = policy.segments.front();
  outer.next_header = kProtoRouting;
  outer.hop_limit = kDefaultHopLimit;
  outer.srh = *std::move(srh);
  outer.inner = EncodeInner(inner);
  ++policy.tx_counter;
  return outer;
}

Disposition NodeDataplane::ProcessLocal(const OuterPacket& packet) {
  auto it = localsids_.find(packet.dst);
  if (it == localsids_.end()) return Drop{"no localsid"};
  LocalSidEntry& entry = it->second;
  ++entry.rx_counter;
  ++processed_;

  const Behavior& behavior = entry.behavior;
  switch (behavior.kind) {
    case Behavior::Kind::kEnd:
    case Behavior::Kind::kEndX: {
      if (!packet.srh) return Drop{"no SRH"};
      if (packet.srh->segments_left() == 0) return Drop{"no more segments"};
      OuterPacket next = packet;
      next.srh->AdvanceSegment();
      next.dst = next.srh->active_segment();
      if (behavior.kind == Behavior::Kind::kEndX) {
        return ForwardVia{behavior.next_hop, std::move(next)};
      }
      return Forward{std::move(next)};
    }
    case Behavior::Kind::kEndDT4:
    case Behavior::Kind::kEndDT6: {
      Family want =
          behavior.kind == Behavior::Kind::kEndDT4 ? Family::kV4 : Family::kV6;
      uint8_t carried = packet.next_header;
      if (packet.srh) {
        if (packet.srh->segments_left() != 0) return Drop{"premature decap"};
        carried = packet.srh->next_header();
      }
      if (carried != InnerProtocol(want)) return Drop{"family mismatch"};
      auto inner = DecodeInner(packet.inner);
      if (!inner.ok()) return Drop{"malformed inner"};
      if (inner->family != want) return Drop{"family mismatch"};
      auto egress = TenantLookup(behavior.table_id, inner->dst);
      if (!egress) return Drop{"no tenant route"};
      return Deliver{*std::move(inner), behavior.table_id, *egress};
    }
  }
  return Drop{"unknown behavior"};
}

FibResult NodeDataplane::FibLookup(const V6Addr& dst) const {
  if (localsids_.contains(dst)) return {FibResult::Kind::kLocal, {}};
  auto hit = fib_.Lookup(dst);
  if (!hit) return {};
  return {FibResult::Kind::kNextHop, hit->second};
}

std::optional<std::string> NodeDataplane::TenantLookup(
    uint32_t table_id, const IpAddress& dst) const {
  auto table = tenant_tables_.find(table_id);
  if (table == tenant_tables_.end()) return std::nullopt;
  auto hit = table->second.Lookup(dst);
  if (!hit) return std::nullopt;
  return hit->second;
}

const LocalSidEntry* NodeDataplane::FindLocalSid(const V6Addr& sid) const {
  auto it = localsids_.find(sid);
  return it == localsids_.end() ? nullptr : &it->second;
}

const SrPolicyEntry* NodeDataplane::FindPolicy(const V6Addr& bsid) const {
  auto it = policies_.find(bsid);
  return it == policies_.end() ? nullptr : &it->second;
}

std::string NodeDataplane::ShowLocalSids() const {
  std::string out;
  for (const auto& [sid, entry] : localsids_) {
    absl::StrAppend(&out, "sid ", sid.ToString(), " behavior ",
                    entry.behavior.Name());
    if (entry.behavior.kind == Behavior::Kind::kEndX) {
      absl::StrAppend(&out, " nh ", entry.behavior.next_hop.ToString());
    } else if (entry.behavior.is_decap()) {
      absl::StrAppend(&out, " table ", entry.behavior.table_id);
    }
    absl::StrAppend(&out, " packets ", entry.rx_counter, "\n");
  }
  return out;
}

std::string NodeDataplane::ShowPolicies() const {
  std::string out;
  for (const auto& [bsid, policy] : policies_) {
    absl::StrAppend(&out, "bsid ", bsid.ToString(), " family ",
                    FamilyName(policy.family), " segments < ",
                    JoinSids(policy.segments), " >\n");
  }
  return out;
}

std::string NodeDataplane::ShowSteering() const {
  std::string out;
  for (const auto& [match, bsid] : steering_.entries()) {
    absl::StrAppend(&out, "prefix ", match.ToString(), " bsid ",
                    bsid.ToString(), "\n");
  }
  return out;
}

std::string NodeDataplane::ShowEncapSource() const {
  return absl::StrCat("encap-source ",
                      encap_source_ ? encap_source_->ToString() : "unset",
                      "\n");
}

std::string NodeDataplane::DumpState() const {
  return absl::StrCat("[policies]\n", ShowPolicies(), "[steering]\n",
                      ShowSteering(), "[encap]\n", ShowEncapSource());
}

std::string DispositionName(const Disposition& d) {
  struct Visitor {
    std::string operator()(const Forward&) const { return "forward"; }
    std::string operator()(const ForwardVia& v) const {
      return "forward-via " + v.next_hop.ToString();
    }
    std::string operator()(const Deliver& v) const {
      return absl::StrCat("deliver table ", v.table_id);
    }
    std::string operator()(const Drop& v) const { return "drop " + v.reason; }
  };
  return std::visit(Visitor{}, d);
}

}  // namespace srv6k8s
