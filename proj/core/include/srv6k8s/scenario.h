// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

// Declarative scenario files: topology, cluster nodes, pools, pods, mode
// and initial policies.

#ifndef SRV6K8S_SCENARIO_H_
#define SRV6K8S_SCENARIO_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "srv6k8s/agent.h"
#include "srv6k8s/bgp_control.h"
#include "srv6k8s/k8s_control.h"
#include "srv6k8s/net_types.h"
#include "srv6k8s/underlay.h"

namespace srv6k8s {

inline constexpr size_t kDefaultMaxSteps = 10000;

struct RouterSpec {
  std::string id;
  std::optional<V6Addr> sid;
};

struct NodeSpec {
  std::string name;
  V6Addr infra;
  std::string router;  // attachment
  std::string link;    // attachment link name
  uint64_t link_cost = 1;
  std::vector<Prefix> pod_prefixes;
  std::optional<V6Addr> dt4;
  std::optional<V6Addr> dt6;
  std::string localsid_pool;
};

struct PodSpec {
  std::string name;
  std::string node;
  std::vector<Family> families;
};

struct InjectorSpec {
  std::string name;
  std::vector<std::string> peers;  // nodes that accept it
};

struct Scenario {
  std::string name;
  AgentMode mode = AgentMode::kBgp;
  uint64_t seed = 1;
  SegmentMode segment_mode = SegmentMode::kDouble;
  bool auto_policies = true;
  ConfigMapLayout layout = ConfigMapLayout::kPerNode;
  uint64_t poll_interval = 1;
  size_t max_steps = kDefaultMaxSteps;

  std::vector<RouterSpec> routers;
  std::vector<Link> links;
  std::vector<NodeSpec> nodes;
  std::vector<IpPool> pools;
  std::string bsid_pool;
  std::vector<PodSpec> pods;
  std::optional<InjectorSpec> injector;
  // Injected once the cluster has converged (bgp mode).
  std::vector<SrPolicySafiUpdate> policies;
  // Written to the store before agents start (configmap mode).
  std::vector<ConfigMapDoc> configmaps;

  const NodeSpec* FindNode(absl::string_view name) const;
  const PodSpec* FindPod(absl::string_view name) const;
};

// Cross-reference checks: unique names, known routers, nodes and pools,
// pods on declared nodes with a prefix of each requested family.
absl::Status ValidateScenario(const Scenario& scenario);

// Parses scenario YAML. Relative file references (ippools, policies,
// configmap) resolve against `base_dir`. Errors are prefixed with
// `source` and carry line numbers.
absl::StatusOr<Scenario> ParseScenario(absl::string_view text,
                                       const std::string& base_dir,
                                       const std::string& source);
absl::StatusOr<Scenario> LoadScenarioFile(const std::string& path);

absl::StatusOr<std::string> ReadTextFile(const std::string& path);

}  // namespace srv6k8s

#endif  // SRV6K8S_SCENARIO_H_
