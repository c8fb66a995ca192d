// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

// Vector packet processing: a directed graph of dispatch nodes, each run
// once per wave over the whole sub-vector routed to it.

#ifndef SRV6K8S_GRAPH_ENGINE_H_
#define SRV6K8S_GRAPH_ENGINE_H_

#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "srv6k8s/net_types.h"
#include "srv6k8s/sr_dataplane.h"

namespace srv6k8s {

inline constexpr size_t kMaxVectorSize = 256;

struct WorkItem {
  std::variant<InnerPacket, OuterPacket> packet;
  // Scratch state passed between nodes.
  std::optional<V6Addr> bsid;
  std::optional<V6Addr> lookup_override;  // End.X next hop
  std::string link;                       // chosen by a lookup node
  std::string egress;                     // pod-side target
  std::string reason;                     // why error-drop got it
};

struct TerminalDisposition {
  enum class Kind : uint8_t { kTx, kDeliver, kDrop };

  Kind kind = Kind::kDrop;
  std::string detail;  // link, pod egress or drop reason
  std::vector<uint8_t> bytes;

  friend auto operator<=>(const TerminalDisposition&,
                          const TerminalDisposition&) = default;
};

std::string ToString(const TerminalDisposition& d);

// What a node decides for one packet: hand it to `next`, or finish it.
struct NodeResult {
  std::string next;
  std::optional<TerminalDisposition> terminal;

  static NodeResult To(std::string next) { return {std::move(next), {}}; }
  static NodeResult Finish(TerminalDisposition d) { return {{}, std::move(d)}; }
};

// Processes a vector in place and returns one result per packet, in order.
using DispatchFn = std::function<std::vector<NodeResult>(std::span<WorkItem>)>;

struct GraphNode {
  std::string name;
  std::vector<std::string> successors;
  DispatchFn dispatch;
};

struct GraphStats {
  size_t dispatch_calls = 0;
  size_t max_subvector = 0;
  size_t waves = 0;
};

class Graph {
 public:
  absl::Status AddNode(GraphNode node);
  void SetEntry(std::string name) { entry_ = std::move(name); }

  // Entry must exist, successors must resolve, and the graph must be
  // acyclic.
  absl::Status Validate() const;

  // 1..256 packets. Returns one terminal disposition per input packet, in
  // input order.
  absl::StatusOr<std::vector<TerminalDisposition>> RunVector(
      std::vector<WorkItem> vector);
  absl::StatusOr<TerminalDisposition> RunScalar(WorkItem item);

  const GraphStats& stats() const { return stats_; }
  const std::string& entry() const { return entry_; }
  std::vector<std::string> NodeNames() const;

 private:
  std::map<std::string, GraphNode> nodes_;
  std::map<std::string, size_t> order_;  // insertion order
  std::string entry_;
  GraphStats stats_;
};

struct GraphOptions {
  // Per-wave cache of steering decisions keyed by destination.
  bool memoize_steering = false;
};

// Node names of the shipped pipeline.
inline constexpr char kNodeIpInput[] = "ip-input";
inline constexpr char kNodeSteer[] = "sr-steer";
inline constexpr char kNodeEncap[] = "sr-h-encaps";
inline constexpr char kNodeLookup[] = "ip6-lookup";
inline constexpr char kNodeLocalSid[] = "sr-localsid";
inline constexpr char kNodeRewrite[] = "ip6-rewrite";
inline constexpr char kNodeTx[] = "interface-output";
inline constexpr char kNodeDeliver[] = "pod-output";
inline constexpr char kNodeDrop[] = "error-drop";

// ip-input -> sr-steer -> sr-h-encaps -> ip6-lookup -> interface-output for
// pod traffic, and ip-input -> ip6-lookup -> sr-localsid -> {ip6-rewrite,
// pod-output} for received SRv6 traffic. `dp` must outlive the graph.
absl::StatusOr<Graph> BuildNodeGraph(NodeDataplane& dp,
                                     const GraphOptions& options = {});

struct BenchRow {
  size_t batch = 0;
  size_t packets = 0;
  double seconds = 0;
  double pps = 0;
};

// Pushes n_packets through `graph` in vectors of `batch` packets, cycling
// over `workload`.
absl::StatusOr<BenchRow> BenchDispatch(Graph& graph,
                                       std::span<const WorkItem> workload,
                                       size_t n_packets, size_t batch);

// CSV with header "batch,packets,seconds,pps" and a trailing
// "# ratio,<vector pps / scalar pps>" line when both batch sizes appear.
std::string BenchCsv(std::span<const BenchRow> rows);

// A node with one encap policy, steering and a FIB route, plus a workload
// of pod packets that all take the encap path.
struct BenchFixture {
  std::unique_ptr<NodeDataplane> dataplane;
  std::vector<WorkItem> workload;
};
BenchFixture MakeEncapBenchFixture(size_t distinct_flows = 64);

}  // namespace srv6k8s

#endif  // SRV6K8S_GRAPH_ENGINE_H_
