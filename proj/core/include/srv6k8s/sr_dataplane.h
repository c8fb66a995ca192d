// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

// Per-node SRv6 dataplane: localSID table, SR policies keyed by binding SID,
// steering rules, encapsulation source, IPv6 FIB and tenant tables.

#ifndef SRV6K8S_SR_DATAPLANE_H_
#define SRV6K8S_SR_DATAPLANE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "srv6k8s/net_types.h"
#include "srv6k8s/prefix_table.h"

namespace srv6k8s {

inline constexpr uint8_t kDefaultHopLimit = 64;
inline constexpr uint32_t kDefaultTable = 0;

struct Behavior {
  enum class Kind : uint8_t { kEnd, kEndX, kEndDT4, kEndDT6 };

  static Behavior End() { return {Kind::kEnd, {}, 0}; }
  static Behavior EndX(const V6Addr& next_hop) {
    return {Kind::kEndX, next_hop, 0};
  }
  static Behavior EndDT4(uint32_t table = kDefaultTable) {
    return {Kind::kEndDT4, {}, table};
  }
  static Behavior EndDT6(uint32_t table = kDefaultTable) {
    return {Kind::kEndDT6, {}, table};
  }
  // Decap behavior for inner packets of `family`.
  static Behavior EndDT(Family family, uint32_t table = kDefaultTable) {
    return family == Family::kV4 ? EndDT4(table) : EndDT6(table);
  }

  // Endpoint behavior codepoints: End=1, End.X=5, End.DT6=18, End.DT4=19.
  uint16_t code() const;
  std::string Name() const;
  bool is_decap() const {
    return kind == Kind::kEndDT4 || kind == Kind::kEndDT6;
  }

  Kind kind = Kind::kEnd;
  V6Addr next_hop;        // End.X only
  uint32_t table_id = 0;  // End.DT4 / End.DT6 only

  friend bool operator==(const Behavior&, const Behavior&) = default;
};

struct LocalSidEntry {
  V6Addr sid;
  Behavior behavior;
  uint64_t rx_counter = 0;
};

struct SrPolicyEntry {
  V6Addr bsid;
  std::vector<V6Addr> segments;  // forward path order
  Family family = Family::kV6;
  uint64_t tx_counter = 0;  // packets encapsulated, not part of identity
};

struct SteeringRule {
  Prefix match;
  V6Addr bsid;
};

// Outgoing adjacency chosen by the FIB.
struct NextHop {
  std::string link;
  std::string neighbor;

  friend bool operator==(const NextHop&, const NextHop&) = default;
};

struct FibResult {
  enum class Kind : uint8_t { kNone, kLocal, kNextHop };
  Kind kind = Kind::kNone;
  NextHop via;
};

// Outcomes of executing a local SID.
struct Forward {
  OuterPacket packet;
};
struct ForwardVia {
  V6Addr next_hop;
  OuterPacket packet;
};
struct Deliver {
  InnerPacket packet;
  uint32_t table_id = 0;
  std::string egress;  // tenant-table target
};
struct Drop {
  std::string reason;
};
using Disposition = std::variant<Forward, ForwardVia, Deliver, Drop>;

class NodeDataplane {
 public:
  NodeDataplane() = default;
  explicit NodeDataplane(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }

  // Installing an identical entry is a no-op. A SID already bound to a
  // different behavior is rebound and its counter reset.
  absl::Status InstallLocalSid(const LocalSidEntry& entry);
  bool RemoveLocalSid(const V6Addr& sid);

  // Same BSID with a new segment list swaps the list in place; steering
  // rules keep pointing at the BSID.
  absl::Status InstallPolicy(const SrPolicyEntry& entry);
  // Fails while steering rules still reference the BSID.
  absl::Status RemovePolicy(const V6Addr& bsid);

  // Fails with a dangling-policy error if the BSID is not installed or its
  // policy family differs from the rule's prefix family.
  absl::Status InstallSteering(const SteeringRule& rule);
  bool RemoveSteering(const Prefix& match);

  void SetEncapSource(const V6Addr& addr);
  const std::optional<V6Addr>& encap_source() const { return encap_source_; }

  void AddRoute(const Prefix& prefix, const NextHop& via);
  void ClearRoutes();
  void AddTenantRoute(uint32_t table_id, const Prefix& prefix,
                      const std::string& egress);

  std::optional<V6Addr> SteerLookup(const IpAddress& dst) const;
  // Steering lookup that also reports the matching prefix.
  std::optional<SteeringRule> SteerMatch(const IpAddress& dst) const;

  // H.Encaps: wraps `inner` in an outer IPv6 header whose SRH carries the
  // policy's segment list.
  absl::StatusOr<OuterPacket> HEncaps(const InnerPacket& inner,
                                      const V6Addr& bsid);

  // Runs the behavior bound to packet.dst and bumps its counter. A
  // destination that is not a local SID is dropped without counting.
  Disposition ProcessLocal(const OuterPacket& packet);

  FibResult FibLookup(const V6Addr& dst) const;
  std::optional<std::string> TenantLookup(uint32_t table_id,
                                          const IpAddress& dst) const;

  const std::map<V6Addr, LocalSidEntry>& localsids() const {
    return localsids_;
  }
  const std::map<V6Addr, SrPolicyEntry>& policies() const { return policies_; }
  const PrefixTable<V6Addr>& steering() const { return steering_; }
  const PrefixTable<NextHop>& fib() const { return fib_; }
  const LocalSidEntry* FindLocalSid(const V6Addr& sid) const;
  const SrPolicyEntry* FindPolicy(const V6Addr& bsid) const;

  // Bumped on every mutation of localsids, policies, steering or encap
  // source; untouched by idempotent reinstalls and by counters.
  uint64_t generation() const { return generation_; }
  // Number of ProcessLocal calls.
  uint64_t processed() const { return processed_; }

  // Line-oriented renderings used by `show`.
  std::string ShowLocalSids() const;
  std::string ShowPolicies() const;
  std::string ShowSteering() const;
  std::string ShowEncapSource() const;
  // Policies, steering and encap source; no counters.
  std::string DumpState() const;

 private:
  std::string name_;
  std::map<V6Addr, LocalSidEntry> localsids_;
  std::map<V6Addr, SrPolicyEntry> policies_;
  PrefixTable<V6Addr> steering_;
  std::optional<V6Addr> encap_source_;
  PrefixTable<NextHop> fib_;
  std::map<uint32_t, PrefixTable<std::string>> tenant_tables_;
  uint64_t generation_ = 0;
  uint64_t processed_ = 0;
};

std::string DispositionName(const Disposition& d);

}  // namespace srv6k8s

#endif  // SRV6K8S_SR_DATAPLANE_H_
