// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

// Per-node agent. Turns BGP updates or ConfigMap documents into dataplane
// state: localSIDs, SR policies, steering rules and the encap source.

#ifndef SRV6K8S_AGENT_H_
#define SRV6K8S_AGENT_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "srv6k8s/bgp_control.h"
#include "srv6k8s/k8s_control.h"
#include "srv6k8s/net_types.h"
#include "srv6k8s/sr_dataplane.h"

namespace srv6k8s {

enum class AgentMode : uint8_t { kBgp, kConfigMap };
enum class SegmentMode : uint8_t {
  kDouble,  // [egress router End SID, egress DT SID]
  kSingle,  // [egress DT SID]
};

absl::string_view ModeName(AgentMode mode);
absl::StatusOr<AgentMode> ParseMode(absl::string_view text);
absl::StatusOr<SegmentMode> ParseSegmentMode(absl::string_view text);

struct AgentConfig {
  std::string node;
  V6Addr infra;
  AgentMode mode = AgentMode::kBgp;
  SegmentMode segment_mode = SegmentMode::kDouble;
  // End SID of the router the node hangs off, used in double-segment mode.
  std::optional<V6Addr> attached_router_sid;
  // Originate one policy per family toward this node at startup (BGP mode).
  bool originate_policies = true;
  std::vector<Prefix> pod_prefixes;
  // Fixed decap SIDs. When unset they come from `localsid_pool`.
  std::optional<V6Addr> static_dt4;
  std::optional<V6Addr> static_dt6;
  std::string localsid_pool;
  std::string bsid_pool;
  // External BGP peers whose SR policies this node accepts.
  std::set<std::string> accepted_injectors;
};

struct AgentEvent {
  uint64_t seq = 0;
  uint64_t time = 0;  // simulated seconds
  std::string node;
  std::string kind;
  std::string detail;
};

// Policy an agent wants for one (endpoint, family).
struct PolicySpec {
  V6Addr bsid;
  std::vector<V6Addr> segments;

  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

struct InstalledPolicy {
  PolicySpec spec;
  std::set<Prefix> steered;

  friend bool operator==(const InstalledPolicy&,
                         const InstalledPolicy&) = default;
};

// Shared services an agent talks to. `store` is needed in ConfigMap mode
// only.
struct AgentContext {
  NodeDataplane* dataplane = nullptr;
  Ipam* ipam = nullptr;
  BgpControlPlane* bgp = nullptr;
  ConfigMapStore* store = nullptr;
  std::function<void(const AgentEvent&)> log;
};

class Agent {
 public:
  Agent(AgentConfig config, AgentContext context);

  const AgentConfig& config() const { return config_; }
  const std::string& node() const { return config_.node; }

  // The BGP receiver to register for this node.
  BgpReceiver Receiver();

  // Seeds localSIDs, tenant routes and the encap source, then advertises
  // pod prefixes (and policies toward this node in BGP mode).
  absl::Status Startup();

  void OnStep1(const std::string& from, const Step1Update& update);
  void OnPolicy(const std::string& from, bool external,
                const SrPolicySafiUpdate& update);
  // Applies a whole document or nothing.
  absl::Status OnConfigMapChange(const ConfigMapDoc& doc);
  // One watch poll in ConfigMap mode. True when a change was applied.
  bool Poll();

  std::optional<V6Addr> dt_sid(Family family) const;
  const std::map<V6Addr, std::set<Prefix>>& prefix_map() const {
    return prefix_map_;
  }
  // Every policy the agent knows, installed or not.
  const std::map<PolicyKey, PolicySpec>& desired() const { return desired_; }
  const std::map<PolicyKey, InstalledPolicy>& installed() const {
    return installed_;
  }
  // Known policies whose endpoint has no prefixes yet.
  std::set<PolicyKey> pending() const;
  const std::optional<ConfigMapDoc>& applied_doc() const {
    return applied_doc_;
  }

 private:
  void Log(std::string kind, std::string detail);
  // Brings `dp` in line with desired_ and prefix_map_ for one key.
  absl::Status Reconcile(NodeDataplane& dp,
                         std::map<PolicyKey, InstalledPolicy>& installed,
                         const PolicyKey& key);
  // Reconciles `keys` on a copy of the dataplane and commits only if every
  // step succeeds.
  absl::Status ReconcileAll(const std::set<PolicyKey>& keys);
  void Teardown(NodeDataplane& dp,
                std::map<PolicyKey, InstalledPolicy>& installed,
                const PolicyKey& key);
  std::set<Prefix> SteeredPrefixes(const PolicyKey& key) const;
  absl::Status SetDecapSid(Family family, const V6Addr& sid);
  absl::StatusOr<V6Addr> AllocateV6(const std::string& pool);
  absl::Status InstallLocalSids();
  absl::Status OriginatePolicies();

  AgentConfig config_;
  AgentContext ctx_;
  std::optional<V6Addr> dt4_;
  std::optional<V6Addr> dt6_;
  std::map<V6Addr, std::set<Prefix>> prefix_map_;
  std::map<PolicyKey, PolicySpec> desired_;
  std::map<PolicyKey, InstalledPolicy> installed_;
  std::optional<ConfigMapDoc> applied_doc_;
  WatchHandle watch_;
  uint32_t next_distinguisher_ = 1;
};

}  // namespace srv6k8s

#endif  // SRV6K8S_AGENT_H_
