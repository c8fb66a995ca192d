// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

#include "srv6k8s/underlay.h"

#include <algorithm>
#include <charconv>
#include <limits>
#include <queue>
#include <tuple>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"

namespace srv6k8s {
namespace {

constexpr uint64_t kInf = std::numeric_limits<uint64_t>::max();
constexpr int kMaxTraceSteps = 512;

std::optional<uint16_t> TrailingNumber(const std::string& id) {
  size_t end = id.size();
  size_t start = end;
  while (start > 0 &&
         absl::ascii_isdigit(static_cast<unsigned char>(id[start - 1]))) {
    --start;
  }
  if (start == end || end - start > 4) return std::nullopt;
  // Written into the SID as hex digits, so "R12" maps to fcff:12::1.
  uint16_t value = 0;
  auto [ptr, ec] =
      std::from_chars(id.data() + start, id.data() + end, value, 16);
  if (ec != std::errc() || ptr != id.data() + end) return std::nullopt;
  return value;
}

}  // namespace

absl::Status Topology::AddRouter(const std::string& id,
                                 std::optional<V6Addr> sid) {
  if (vertices_.contains(id)) {
    return absl::AlreadyExistsError(
        absl::StrCat("duplicate vertex '", id, "'"));
  }
  Vertex v;
  v.router = true;
  if (sid) {
    v.sid = sid;
    v.prefix = Prefix::HostRoute(*sid);
  } else if (auto n = TrailingNumber(id)) {
    V6Addr::Bytes bytes{};
    bytes[0] = 0xfc;
    bytes[1] = 0xff;
    bytes[2] = static_cast<uint8_t>(*n >> 8);
    bytes[3] = static_cast<uint8_t>(*n);
    V6Addr base(bytes);
    v.prefix = *Prefix::Make(base, 32);
    v.sid = base.Plus(1);
  }
  vertices_.emplace(id, v);
  routers_.push_back(id);
  return absl::OkStatus();
}

absl::Status Topology::AddNode(const std::string& id) {
  if (vertices_.contains(id)) {
    return absl::AlreadyExistsError(
        absl::StrCat("duplicate vertex '", id, "'"));
  }
  vertices_.emplace(id, Vertex{});
  nodes_.push_back(id);
  return absl::OkStatus();
}

absl::Status Topology::AddLink(const Link& link) {
  if (!Has(link.a) || !Has(link.b)) {
    return absl::NotFoundError(absl::StrCat("link '", link.name,
                                            "' joins unknown vertex ",
                                            Has(link.a) ? link.b : link.a));
  }
  if (link.a == link.b) {
    return absl::InvalidArgumentError(
        absl::StrCat("link '", link.name, "' is a self loop"));
  }
  if (link.cost == 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("link '", link.name, "' needs a positive cost"));
  }
  for (const Link& l : links_) {
    if (l.name == link.name) {
      return absl::AlreadyExistsError(
          absl::StrCat("duplicate link name '", link.name, "'"));
    }
  }
  links_.push_back(link);
  return absl::OkStatus();
}

bool Topology::IsRouter(const std::string& id) const {
  auto it = vertices_.find(id);
  return it != vertices_.end() && it->second.router;
}

std::vector<const Link*> Topology::LinksOf(const std::string& id) const {
  std::vector<const Link*> out;
  for (const Link& l : links_) {
    if (l.a == id || l.b == id) out.push_back(&l);
  }
  std::sort(out.begin(), out.end(),
            [](const Link* x, const Link* y) { return x->name < y->name; });
  return out;
}

std::optional<V6Addr> Topology::RouterSid(const std::string& id) const {
  auto it = vertices_.find(id);
  if (it == vertices_.end()) return std::nullopt;
  return it->second.sid;
}

std::optional<Prefix> Topology::RouterPrefix(const std::string& id) const {
  auto it = vertices_.find(id);
  if (it == vertices_.end()) return std::nullopt;
  return it->second.prefix;
}

std::optional<NextHop> RouteTable::Lookup(const std::string& vertex,
                                          const IpAddress& dst) const {
  auto it = per_vertex.find(vertex);
  if (it == per_vertex.end()) return std::nullopt;
  auto hit = it->second.Lookup(dst);
  if (!hit) return std::nullopt;
  return hit->second;
}

absl::StatusOr<RouteTable> ComputeRoutes(const Topology& topology,
                                         const Advertisements& advertised) {
  std::vector<std::string> vertices = topology.routers();
  vertices.insert(vertices.end(), topology.nodes().begin(),
                  topology.nodes().end());

  RouteTable table;
  for (const std::string& source : vertices) {
    auto& dist = table.distance[source];
    for (const std::string& v : vertices) dist[v] = kInf;
    dist[source] = 0;
    using Item = std::pair<uint64_t, std::string>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    queue.emplace(0, source);
    while (!queue.empty()) {
      auto [d, u] = queue.top();
      queue.pop();
      if (d != dist[u]) continue;
      if (u != source && !topology.IsRouter(u)) continue;  // no transit
      for (const Link* l : topology.LinksOf(u)) {
        const std::string& v = l->a == u ? l->b : l->a;
        if (d + l->cost < dist[v]) {
          dist[v] = d + l->cost;
          queue.emplace(dist[v], v);
        }
      }
    }
  }

  for (const std::string& vertex : vertices) {
    auto& fib = table.per_vertex[vertex];
    for (const auto& [prefix, origin] : advertised) {
      if (!topology.Has(origin)) {
        return absl::NotFoundError(
            absl::StrCat("route computation: ", prefix.ToString(),
                         " advertised by unknown vertex '", origin, "'"));
      }
      if (origin == vertex) continue;
      std::optional<std::tuple<uint64_t, std::string, std::string>> best;
      for (const Link* l : topology.LinksOf(vertex)) {
        const std::string& next = l->a == vertex ? l->b : l->a;
        uint64_t rest;
        if (next == origin) {
          rest = 0;
        } else if (topology.IsRouter(next)) {
          rest = table.distance[next][origin];
          if (rest == kInf) continue;
        } else {
          continue;
        }
        auto candidate = std::make_tuple(l->cost + rest, l->name, next);
        if (!best || candidate < *best) best = candidate;
      }
      if (!best) {
        return absl::FailedPreconditionError(
            absl::StrCat("route computation: ", prefix.ToString(), " (origin ",
                         origin, ") unreachable from ", vertex));
      }
      fib.Insert(prefix, NextHop{std::get<1>(*best), std::get<2>(*best)});
    }
  }
  return table;
}

TraceRecord ForwardPacket(const Topology& topology, const RouteTable& routes,
                          const DataplaneResolver& dataplanes,
                          const std::string& from, OuterPacket packet) {
  TraceRecord trace;
  std::string vertex = from;
  std::optional<V6Addr> via;  // End.X next hop for the next move only
  bool consumed_here = false;

  auto left = [](const OuterPacket& p) {
    return p.srh ? static_cast<int>(p.srh->segments_left()) : -1;
  };
  auto drop = [&](std::string reason) {
    trace.hops.push_back({vertex, packet.dst, "drop " + reason, left(packet)});
    trace.drop_reason = std::move(reason);
    return trace;
  };

  for (int step = 0; step < kMaxTraceSteps; ++step) {
    NodeDataplane* dp = dataplanes ? dataplanes(vertex) : nullptr;
    if (!via && dp != nullptr && dp->FindLocalSid(packet.dst) != nullptr) {
      V6Addr arrived = packet.dst;
      Disposition d = dp->ProcessLocal(packet);
      if (auto* f = std::get_if<Forward>(&d)) {
        packet = std::move(f->packet);
        trace.hops.push_back({vertex, arrived, "end", left(packet)});
        consumed_here = true;
        continue;
      }
      if (auto* v = std::get_if<ForwardVia>(&d)) {
        packet = std::move(v->packet);
        via = v->next_hop;
        trace.hops.push_back({vertex, arrived, "end.x", left(packet)});
        consumed_here = true;
        continue;
      }
      if (auto* del = std::get_if<Deliver>(&d)) {
        trace.hops.push_back(
            {vertex, arrived, "deliver " + del->egress, left(packet)});
        trace.delivered = std::move(*del);
        trace.delivered_at = vertex;
        return trace;
      }
      return drop(std::get<Drop>(d).reason);
    }

    bool router = topology.IsRouter(vertex);
    if (!router && vertex != from && !consumed_here) {
      return drop("not local");
    }
    auto hop = routes.Lookup(vertex, via.value_or(packet.dst));
    via.reset();
    if (!hop) return drop("no route");
    if (router) {
      if (packet.hop_limit <= 1) return drop("ttl");
      --packet.hop_limit;
    }
    trace.hops.push_back(
        {vertex, packet.dst, "fwd " + hop->link, left(packet)});
    vertex = hop->neighbor;
    consumed_here = false;
  }
  return drop("loop");
}

std::vector<std::string> Waypoints(const TraceRecord& trace) {
  std::vector<std::string> out;
  for (const TraceHop& hop : trace.hops) {
    if (hop.action == "end" || hop.action == "end.x") {
      out.push_back(hop.vertex);
    }
  }
  return out;
}

std::string FormatTrace(const TraceRecord& trace) {
  std::string out;
  for (const TraceHop& hop : trace.hops) {
    absl::StrAppend(&out, "hop ", hop.vertex, " dst=", hop.dst.ToString(),
                    " action=", hop.action, "\n");
  }
  return out;
}

}  // namespace srv6k8s
