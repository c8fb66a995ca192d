// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

#include "srv6k8s/graph_engine.h"

#include <chrono>
#include <cmath>
#include <set>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace srv6k8s {
namespace {

std::vector<uint8_t> PacketBytes(const WorkItem& item) {
  if (const auto* inner = std::get_if<InnerPacket>(&item.packet)) {
    if (!ValidateInner(*inner).ok()) return {};
    return EncodeInner(*inner);
  }
  return EncodeOuter(std::get<OuterPacket>(item.packet));
}

NodeResult DropTo(WorkItem& item, std::string reason) {
  item.reason = std::move(reason);
  return NodeResult::To(kNodeDrop);
}

// Routes an outer packet by FIB. `allow_local` picks between handing local
// SIDs to sr-localsid and treating them as a loop after an endpoint rewrite.
NodeResult RouteOuter(const NodeDataplane& dp, WorkItem& item,
                      bool allow_local) {
  const auto& outer = std::get<OuterPacket>(item.packet);
  V6Addr target = item.lookup_override.value_or(outer.dst);
  FibResult fib = dp.FibLookup(target);
  switch (fib.kind) {
    case FibResult::Kind::kLocal:
      if (allow_local) return NodeResult::To(kNodeLocalSid);
      return DropTo(item, "sid loop");
    case FibResult::Kind::kNextHop:
      item.link = fib.via.link;
      return NodeResult::To(kNodeTx);
    case FibResult::Kind::kNone:
      break;
  }
  return DropTo(item, "no route");
}

}  // namespace

std::string ToString(const TerminalDisposition& d) {
  switch (d.kind) {
    case TerminalDisposition::Kind::kTx:
      return "tx " + d.detail;
    case TerminalDisposition::Kind::kDeliver:
      return "deliver " + d.detail;
    case TerminalDisposition::Kind::kDrop:
      return "drop " + d.detail;
  }
  return "?";
}

absl::Status Graph::AddNode(GraphNode node) {
  if (node.name.empty()) {
    return absl::InvalidArgumentError("graph node needs a name");
  }
  if (!node.dispatch) {
    return absl::InvalidArgumentError(
        absl::StrCat("graph node '", node.name, "' has no dispatch"));
  }
  std::string name = node.name;
  auto [it, inserted] = nodes_.emplace(name, std::move(node));
  if (!inserted) {
    return absl::AlreadyExistsError(
        absl::StrCat("graph node '", name, "' defined twice"));
  }
  order_.emplace(name, order_.size());
  return absl::OkStatus();
}

std::vector<std::string> Graph::NodeNames() const {
  std::vector<std::string> names(order_.size());
  for (const auto& [name, index] : order_) names[index] = name;
  return names;
}

absl::Status Graph::Validate() const {
  if (entry_.empty() || !nodes_.contains(entry_)) {
    return absl::FailedPreconditionError(absl::StrCat(
        "graph configuration: entry node '", entry_, "' does not exist"));
  }
  for (const auto& [name, node] : nodes_) {
    for (const std::string& next : node.successors) {
      if (!nodes_.contains(next)) {
        return absl::FailedPreconditionError(
            absl::StrCat("graph configuration: '", name,
                         "' names unknown successor '", next, "'"));
      }
    }
  }
  // Depth-first cycle check.
  std::map<std::string, int> color;
  std::function<bool(const std::string&)> cyclic =
      [&](const std::string& name) {
        int& c = color[name];
        if (c == 1) return true;
        if (c == 2) return false;
        c = 1;
        for (const std::string& next : nodes_.at(name).successors) {
          if (cyclic(next)) return true;
        }
        color[name] = 2;
        return false;
      };
  for (const auto& [name, node] : nodes_) {
    if (cyclic(name)) {
      return absl::FailedPreconditionError(
          absl::StrCat("graph configuration: cycle through '", name, "'"));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<TerminalDisposition>> Graph::RunVector(
    std::vector<WorkItem> vector) {
  if (vector.empty() || vector.size() > kMaxVectorSize) {
    return absl::InvalidArgumentError(
        absl::StrCat("packet vector must hold 1..", kMaxVectorSize,
                     " packets, got ", vector.size()));
  }
  if (absl::Status s = Validate(); !s.ok()) return s;

  struct SubVector {
    std::vector<size_t> slots;
    std::vector<WorkItem> items;
  };
  // Keyed by insertion order so a wave visits nodes deterministically.
  std::map<size_t, std::pair<std::string, SubVector>> wave;
  SubVector first;
  for (size_t i = 0; i < vector.size(); ++i) first.slots.push_back(i);
  first.items = std::move(vector);
  const size_t n = first.slots.size();
  wave.emplace(order_.at(entry_), std::make_pair(entry_, std::move(first)));

  std::vector<std::optional<TerminalDisposition>> results(n);
  size_t waves = 0;
  while (!wave.empty()) {
    if (++waves > nodes_.size() + 1) {
      return absl::InternalError("graph run did not terminate");
    }
    std::map<size_t, std::pair<std::string, SubVector>> next_wave;
    for (auto& [order, entry] : wave) {
      auto& [name, sub] = entry;
      const GraphNode& node = nodes_.at(name);
      ++stats_.dispatch_calls;
      stats_.max_subvector = std::max(stats_.max_subvector, sub.items.size());
      std::vector<NodeResult> out = node.dispatch(std::span(sub.items));
      if (out.size() != sub.items.size()) {
        return absl::InternalError(absl::StrCat("node '", name, "' returned ",
                                                out.size(), " results for ",
                                                sub.items.size(), " packets"));
      }
      for (size_t i = 0; i < out.size(); ++i) {
        size_t slot = sub.slots[i];
        if (out[i].terminal) {
          results[slot] = std::move(*out[i].terminal);
          continue;
        }
        auto target = order_.find(out[i].next);
        if (target == order_.end()) {
          return absl::FailedPreconditionError(absl::StrCat(
              "graph configuration: '", name,
              "' routed a packet to unknown node '", out[i].next, "'"));
        }
        auto& dest = next_wave[target->second];
        dest.first = out[i].next;
        dest.second.slots.push_back(slot);
        dest.second.items.push_back(std::move(sub.items[i]));
      }
    }
    wave = std::move(next_wave);
  }
  stats_.waves += waves;

  std::vector<TerminalDisposition> dispositions;
  dispositions.reserve(n);
  for (auto& r : results) {
    if (!r) return absl::InternalError("packet left the graph unaccounted");
    dispositions.push_back(std::move(*r));
  }
  return dispositions;
}

absl::StatusOr<TerminalDisposition> Graph::RunScalar(WorkItem item) {
  std::vector<WorkItem> one;
  one.push_back(std::move(item));
  auto out = RunVector(std::move(one));
  if (!out.ok()) return out.status();
  return std::move(out->front());
}

absl::StatusOr<Graph> BuildNodeGraph(NodeDataplane& dp,
                                     const GraphOptions& options) {
  Graph g;
  NodeDataplane* plane = &dp;

  auto add = [&](GraphNode node) { return g.AddNode(std::move(node)); };

  absl::Status s = add({kNodeIpInput,
                        {kNodeSteer, kNodeLookup, kNodeDrop},
                        [](std::span<WorkItem> items) {
                          std::vector<NodeResult> out;
                          out.reserve(items.size());
                          for (WorkItem& item : items) {
                            const auto* inner =
                                std::get_if<InnerPacket>(&item.packet);
                            if (inner == nullptr) {
                              out.push_back(NodeResult::To(kNodeLookup));
                            } else if (!ValidateInner(*inner).ok()) {
                              out.push_back(DropTo(item, "malformed inner"));
                            } else {
                              out.push_back(NodeResult::To(kNodeSteer));
                            }
                          }
                          return out;
                        }});
  if (!s.ok()) return s;

  bool memoize = options.memoize_steering;
  s = add({kNodeSteer,
           {kNodeEncap, kNodeDeliver, kNodeDrop},
           [plane, memoize](std::span<WorkItem> items) {
             // Cache built by the first packet of each destination.
             std::map<IpAddress, std::optional<V6Addr>> cache;
             std::vector<NodeResult> out;
             out.reserve(items.size());
             for (WorkItem& item : items) {
               const auto& inner = std::get<InnerPacket>(item.packet);
               if (auto pod = plane->TenantLookup(kDefaultTable, inner.dst)) {
                 item.egress = *pod;
                 out.push_back(NodeResult::To(kNodeDeliver));
                 continue;
               }
               std::optional<V6Addr> bsid;
               if (memoize) {
                 auto it = cache.find(inner.dst);
                 if (it == cache.end()) {
                   it = cache.emplace(inner.dst, plane->SteerLookup(inner.dst))
                            .first;
                 }
                 bsid = it->second;
               } else {
                 bsid = plane->SteerLookup(inner.dst);
               }
               if (!bsid) {
                 out.push_back(DropTo(item, "no steering match"));
                 continue;
               }
               item.bsid = bsid;
               out.push_back(NodeResult::To(kNodeEncap));
             }
             return out;
           }});
  if (!s.ok()) return s;

  s = add({kNodeEncap,
           {kNodeLookup, kNodeDrop},
           [plane](std::span<WorkItem> items) {
             std::vector<NodeResult> out;
             out.reserve(items.size());
             for (WorkItem& item : items) {
               auto outer = plane->HEncaps(std::get<InnerPacket>(item.packet),
                                           *item.bsid);
               if (!outer.ok()) {
                 out.push_back(DropTo(item, "encap failed"));
                 continue;
               }
               item.packet = *std::move(outer);
               out.push_back(NodeResult::To(kNodeLookup));
             }
             return out;
           }});
  if (!s.ok()) return s;

  s = add({kNodeLookup,
           {kNodeLocalSid, kNodeTx, kNodeDrop},
           [plane](std::span<WorkItem> items) {
             std::vector<NodeResult> out;
             out.reserve(items.size());
             for (WorkItem& item : items) {
               out.push_back(RouteOuter(*plane, item, /*allow_local=*/true));
             }
             return out;
           }});
  if (!s.ok()) return s;

  s = add({kNodeLocalSid,
           {kNodeRewrite, kNodeDeliver, kNodeDrop},
           [plane](std::span<WorkItem> items) {
             std::vector<NodeResult> out;
             out.reserve(items.size());
             for (WorkItem& item : items) {
               Disposition d =
                   plane->ProcessLocal(std::get<OuterPacket>(item.packet));
               if (auto* f = std::get_if<Forward>(&d)) {
                 item.packet = std::move(f->packet);
                 out.push_back(NodeResult::To(kNodeRewrite));
               } else if (auto* v = std::get_if<ForwardVia>(&d)) {
                 item.lookup_override = v->next_hop;
                 item.packet = std::move(v->packet);
                 out.push_back(NodeResult::To(kNodeRewrite));
               } else if (auto* del = std::get_if<Deliver>(&d)) {
                 item.egress = del->egress;
                 item.packet = std::move(del->packet);
                 out.push_back(NodeResult::To(kNodeDeliver));
               } else {
                 out.push_back(DropTo(item, std::get<Drop>(d).reason));
               }
             }
             return out;
           }});
  if (!s.ok()) return s;

  s = add(
      {kNodeRewrite, {kNodeTx, kNodeDrop}, [plane](std::span<WorkItem> items) {
         std::vector<NodeResult> out;
         out.reserve(items.size());
         for (WorkItem& item : items) {
           out.push_back(RouteOuter(*plane, item, /*allow_local=*/false));
         }
         return out;
       }});
  if (!s.ok()) return s;

  s = add(
      {kNodeTx, {}, [](std::span<WorkItem> items) {
         std::vector<NodeResult> out;
         out.reserve(items.size());
         for (WorkItem& item : items) {
           out.push_back(NodeResult::Finish(
               {TerminalDisposition::Kind::kTx, item.link, PacketBytes(item)}));
         }
         return out;
       }});
  if (!s.ok()) return s;

  s = add({kNodeDeliver, {}, [](std::span<WorkItem> items) {
             std::vector<NodeResult> out;
             out.reserve(items.size());
             for (WorkItem& item : items) {
               out.push_back(
                   NodeResult::Finish({TerminalDisposition::Kind::kDeliver,
                                       item.egress, PacketBytes(item)}));
             }
             return out;
           }});
  if (!s.ok()) return s;

  s = add({kNodeDrop, {}, [](std::span<WorkItem> items) {
             std::vector<NodeResult> out;
             out.reserve(items.size());
             for (WorkItem& item : items) {
               out.push_back(
                   NodeResult::Finish({TerminalDisposition::Kind::kDrop,
                                       item.reason, PacketBytes(item)}));
             }
             return out;
           }});
  if (!s.ok()) return s;

  g.SetEntry(kNodeIpInput);
  if (s = g.Validate(); !s.ok()) return s;
  return g;
}

absl::StatusOr<BenchRow> BenchDispatch(Graph& graph,
                                       std::span<const WorkItem> workload,
                                       size_t n_packets, size_t batch) {
  if (n_packets == 0) {
    return absl::InvalidArgumentError("n_packets must be positive");
  }
  if (batch == 0 || batch > kMaxVectorSize) {
    return absl::InvalidArgumentError(
        absl::StrCat("batch must be 1..", kMaxVectorSize));
  }
  if (workload.empty()) {
    return absl::InvalidArgumentError("empty benchmark workload");
  }
  size_t cursor = 0;
  size_t done = 0;
  auto start = std::chrono::steady_clock::now();
  while (done < n_packets) {
    size_t take = std::min(batch, n_packets - done);
    std::vector<WorkItem> vector;
    vector.reserve(take);
    for (size_t i = 0; i < take; ++i) {
      vector.push_back(workload[cursor]);
      cursor = (cursor + 1) % workload.size();
    }
    auto out = graph.RunVector(std::move(vector));
    if (!out.ok()) return out.status();
    done += take;
  }
  std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - start;
  BenchRow row;
  row.batch = batch;
  row.packets = n_packets;
  row.seconds = std::max(elapsed.count(), 1e-9);
  row.pps = static_cast<double>(n_packets) / row.seconds;
  return row;
}

std::string BenchCsv(std::span<const BenchRow> rows) {
  std::string out = "batch,packets,seconds,pps\n";
  double scalar = 0, vector = 0;
  for (const BenchRow& row : rows) {
    absl::StrAppendFormat(&out, "%d,%d,%.6f,%.1f\n", row.batch, row.packets,
                          row.seconds, row.pps);
    if (row.batch == 1) scalar = row.pps;
    if (row.batch == kMaxVectorSize) vector = row.pps;
  }
  if (scalar > 0 && vector > 0) {
    absl::StrAppendFormat(&out, "# ratio,%.4f\n", vector / scalar);
  }
  return out;
}

BenchFixture MakeEncapBenchFixture(size_t distinct_flows) {
  BenchFixture fx;
  fx.dataplane = std::make_unique<NodeDataplane>("bench");
  NodeDataplane& dp = *fx.dataplane;
  dp.SetEncapSource(V6Addr::MustParse("fd12::1000"));
  SrPolicyEntry policy{
      V6Addr::MustParse("cafe::4"),
      {V6Addr::MustParse("fcff:5::1"), V6Addr::MustParse("fcff:7::1"),
       V6Addr::MustParse("fcff:8::1"),
       V6Addr::MustParse("fcdd::12aa:d460:b250:45:b04")},
      Family::kV4};
  (void)dp.InstallPolicy(policy);
  (void)dp.InstallSteering({*Prefix::Parse("172.16.104.64/26"), policy.bsid});
  dp.AddRoute(*Prefix::Parse("fcff:5::/32"), {"uplink", "R8"});
  for (size_t i = 0; i < std::max<size_t>(distinct_flows, 1); ++i) {
    InnerPacket p;
    p.family = Family::kV4;
    p.src = V4Addr(0xAC10A680 + static_cast<uint32_t>(i % 64));
    p.dst = V4Addr(0xAC106840 + static_cast<uint32_t>(i % 64));
    p.payload.assign(64, static_cast<uint8_t>(i));
    WorkItem item;
    item.packet = std::move(p);
    fx.workload.push_back(std::move(item));
  }
  return fx;
}

}  // namespace srv6k8s
