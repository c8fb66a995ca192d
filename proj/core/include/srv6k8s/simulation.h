// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

// A whole cluster on an emulated backbone: underlay routes, per-node
// dataplanes and agents, the BGP session bus and the ConfigMap store,
// driven by one deterministic scheduler.

#ifndef SRV6K8S_SIMULATION_H_
#define SRV6K8S_SIMULATION_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "srv6k8s/agent.h"
#include "srv6k8s/bgp_control.h"
#include "srv6k8s/graph_engine.h"
#include "srv6k8s/k8s_control.h"
#include "srv6k8s/scenario.h"
#include "srv6k8s/sr_dataplane.h"
#include "srv6k8s/underlay.h"

namespace srv6k8s {

struct PingReport {
  std::string src;
  std::string dst;
  Family family = Family::kV4;
  size_t sent = 0;
  size_t delivered = 0;
  std::map<std::string, size_t> drops;  // reason -> count
  std::vector<TraceRecord> traces;

  size_t dropped() const { return sent - delivered; }
};

std::string FormatPing(const PingReport& report);

// Differences in agents' known policies caused by one operation.
struct ChangeSummary {
  size_t added = 0;
  size_t replaced = 0;
  size_t removed = 0;

  bool empty() const { return added + replaced + removed == 0; }
  // "0 changes", or the non-zero parts such as "1 replaced".
  std::string ToString() const;
};

enum class ShowWhat : uint8_t {
  kLocalSids,
  kPolicies,
  kSteering,
  kEncapSource
};

absl::StatusOr<ShowWhat> ParseShowWhat(absl::string_view text);

class Simulation {
 public:
  // Builds the topology, starts every agent and converges.
  static absl::StatusOr<std::unique_ptr<Simulation>> Create(Scenario scenario);

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  // Runs the BGP bus and ConfigMap polls until nothing changes. Fails when
  // the scenario's step bound is exceeded.
  absl::Status Converge();

  absl::StatusOr<PingReport> Ping(absl::string_view src_pod,
                                  absl::string_view dst_pod, size_t count,
                                  std::optional<Family> family = {});
  // One packet; its trace.
  absl::StatusOr<TraceRecord> Trace(absl::string_view src_pod,
                                    absl::string_view dst_pod,
                                    std::optional<Family> family = {});

  absl::StatusOr<std::string> Show(absl::string_view node, ShowWhat what) const;

  // bgp mode only: inject through the scenario's injector peer.
  absl::StatusOr<ChangeSummary> Inject(const SrPolicySafiUpdate& update);
  // bgp mode only: inject from a peer the nodes never registered.
  absl::Status InjectUnregistered(const std::string& peer,
                                  const SrPolicySafiUpdate& update);
  // configmap mode only: writes every document of `text`, then converges.
  absl::StatusOr<ChangeSummary> ApplyConfigMap(absl::string_view text);
  absl::StatusOr<ChangeSummary> ApplyConfigMapDocs(
      const std::vector<ConfigMapDoc>& docs);

  // JSON metrics: counters, control-plane message counts, pings, traces.
  std::string ReportJson() const;

  // Policies, steering and encap source of every node.
  std::string DumpDataplanes() const;
  // Number of installed (policy, steering) tunnels per family.
  size_t TunnelCount(Family family) const;

  const Scenario& scenario() const { return scenario_; }
  const Topology& topology() const { return topology_; }
  const RouteTable& routes() const { return routes_; }
  NodeDataplane* dataplane(absl::string_view vertex);
  const NodeDataplane* dataplane(absl::string_view vertex) const;
  const Agent* agent(absl::string_view node) const;
  const BgpCounters& bgp_counters() const { return bgp_->counters(); }
  const CostMeter& configmap_meter() const { return store_->meter(); }
  const KvStore& kv_store() const { return kv_; }
  const std::vector<AgentEvent>& events() const { return events_; }
  std::string FormatEvents() const;
  uint64_t time() const { return time_; }
  std::optional<IpAddress> PodAddress(absl::string_view pod,
                                      Family family) const;

 private:
  explicit Simulation(Scenario scenario);

  absl::Status Build();
  // Recomputes underlay routes and node FIBs when localSIDs moved.
  absl::Status RefreshRoutes();
  std::map<std::string, std::map<PolicyKey, PolicySpec>> SnapshotDesired()
      const;
  ChangeSummary Summarize(
      const std::map<std::string, std::map<PolicyKey, PolicySpec>>& before)
      const;
  absl::StatusOr<PingReport> RunPing(absl::string_view src_pod,
                                     absl::string_view dst_pod, size_t count,
                                     std::optional<Family> family);

  Scenario scenario_;
  Topology topology_;
  RouteTable routes_;
  Advertisements advertised_;
  Ipam ipam_;
  KvStore kv_;
  std::unique_ptr<ConfigMapStore> store_;
  std::unique_ptr<BgpControlPlane> bgp_;
  std::map<std::string, std::unique_ptr<NodeDataplane>, std::less<>>
      dataplanes_;
  std::map<std::string, std::unique_ptr<Agent>, std::less<>> agents_;
  std::vector<AgentEvent> events_;
  std::vector<PingReport> pings_;
  uint64_t time_ = 0;
  size_t steps_ = 0;
};

// CSV comparing batch 1 with the given batch sizes over the encap fixture.
absl::StatusOr<std::string> RunBench(size_t n_packets,
                                     const std::vector<size_t>& batches);

}  // namespace srv6k8s

#endif  // SRV6K8S_SIMULATION_H_
