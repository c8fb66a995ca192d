// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

// Emulated routed backbone: routers and attached cluster nodes joined by
// weighted links, shortest-path routes, and hop-by-hop forwarding with
// path tracing.

#ifndef SRV6K8S_UNDERLAY_H_
#define SRV6K8S_UNDERLAY_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "srv6k8s/net_types.h"
#include "srv6k8s/prefix_table.h"
#include "srv6k8s/sr_dataplane.h"

namespace srv6k8s {

struct Link {
  std::string name;
  std::string a;
  std::string b;
  uint64_t cost = 1;
};

class Topology {
 public:
  // Router SIDs default to fcff:<n>::1 under fcff:<n>::/32 where <n> is the
  // router id's trailing number written as hex digits ("R4" -> fcff:4::1).
  absl::Status AddRouter(const std::string& id,
                         std::optional<V6Addr> sid = std::nullopt);
  // Cluster nodes terminate traffic; they never carry transit.
  absl::Status AddNode(const std::string& id);
  absl::Status AddLink(const Link& link);

  bool Has(const std::string& id) const { return vertices_.contains(id); }
  bool IsRouter(const std::string& id) const;
  const std::vector<std::string>& routers() const { return routers_; }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  // Links touching `id`, sorted by name.
  std::vector<const Link*> LinksOf(const std::string& id) const;

  std::optional<V6Addr> RouterSid(const std::string& id) const;
  std::optional<Prefix> RouterPrefix(const std::string& id) const;

 private:
  struct Vertex {
    bool router = false;
    std::optional<V6Addr> sid;
    std::optional<Prefix> prefix;
  };

  std::map<std::string, Vertex> vertices_;
  std::vector<std::string> routers_;
  std::vector<std::string> nodes_;
  std::vector<Link> links_;
};

// Prefix -> vertex that originates it.
using Advertisements = std::map<Prefix, std::string>;

struct RouteTable {
  std::map<std::string, PrefixTable<NextHop>> per_vertex;
  // Shortest-path cost between vertices, transit through routers only.
  std::map<std::string, std::map<std::string, uint64_t>> distance;

  std::optional<NextHop> Lookup(const std::string& vertex,
                                const IpAddress& dst) const;
};

// Dijkstra from every vertex; at each vertex the next hop toward an origin
// minimizes link cost plus remaining distance, ties broken by the smaller
// link name.
absl::StatusOr<RouteTable> ComputeRoutes(const Topology& topology,
                                         const Advertisements& advertised);

struct TraceHop {
  std::string vertex;
  V6Addr dst;  // outer destination on arrival
  std::string action;
  int segments_left = -1;  // after the action, -1 without SRH
};

struct TraceRecord {
  std::vector<TraceHop> hops;
  std::optional<Deliver> delivered;
  std::string delivered_at;
  std::string drop_reason;

  bool ok() const { return delivered.has_value(); }
};

// Maps a vertex id to its dataplane, or nullptr for vertices without one.
using DataplaneResolver = std::function<NodeDataplane*(const std::string&)>;

// Walks `packet` from `from` until it is delivered or dropped. Routers
// decrement hop_limit before forwarding and drop at 1.
TraceRecord ForwardPacket(const Topology& topology, const RouteTable& routes,
                          const DataplaneResolver& dataplanes,
                          const std::string& from, OuterPacket packet);

// Vertices at which an endpoint behavior consumed a segment.
std::vector<std::string> Waypoints(const TraceRecord& trace);

// One "hop <id> dst=<addr> action=<...>" line per hop.
std::string FormatTrace(const TraceRecord& trace);

}  // namespace srv6k8s

#endif  // SRV6K8S_UNDERLAY_H_
