// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

#include "srv6k8s/underlay.h"

#include <functional>
#include <limits>
#include <random>
#include <set>

#include "absl/strings/str_cat.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace srv6k8s {
namespace {

using testing::P;
using testing::V6;

constexpr uint64_t kInf = std::numeric_limits<uint64_t>::max();

Topology TeTestbed() {
  Topology t;
  for (int i = 1; i <= 8; ++i) {
    EXPECT_TRUE(t.AddRouter("R" + std::to_string(i)).ok());
  }
  for (const char* n : {"master", "worker1", "worker2"}) {
    EXPECT_TRUE(t.AddNode(n).ok());
  }
  const std::vector<Link> links = {
      {"L01", "R1", "R2", 10},
      {"L02", "R2", "R3", 10},
      {"L03", "R3", "R4", 10},
      {"L04", "R4", "R8", 10},
      {"L05", "R8", "R7", 10},
      {"L06", "R7", "R2", 10},
      {"L07", "R1", "R5", 10},
      {"L08", "R5", "R6", 10},
      {"L09", "R6", "R8", 10},
      {"L10", "R5", "R7", 10},
      {"L11", "R3", "R6", 10},
      {"R1-master", "R1", "master", 1},
      {"R3-worker1", "R3", "worker1", 1},
      {"R8-worker2", "R8", "worker2", 1},
  };
  for (const Link& l : links) EXPECT_TRUE(t.AddLink(l).ok());
  return t;
}

Advertisements Loopbacks(const Topology& t) {
  Advertisements adv;
  for (const std::string& r : t.routers()) adv[*t.RouterPrefix(r)] = r;
  adv[P("fd10::1000/128")] = "master";
  adv[P("fd11::1000/128")] = "worker1";
  adv[P("fd12::1000/128")] = "worker2";
  return adv;
}

// Minimum cost over every simple path; only routers may be transited.
uint64_t BruteForceCost(const Topology& t, const std::string& from,
                        const std::string& to) {
  uint64_t best = kInf;
  std::set<std::string> seen = {from};
  std::function<void(const std::string&, uint64_t)> walk =
      [&](const std::string& at, uint64_t cost) {
        if (at == to) {
          best = std::min(best, cost);
          return;
        }
        if (at != from && !t.IsRouter(at)) return;
        for (const Link* l : t.LinksOf(at)) {
          const std::string& next = l->a == at ? l->b : l->a;
          if (seen.contains(next)) continue;
          seen.insert(next);
          walk(next, cost + l->cost);
          seen.erase(next);
        }
      };
  walk(from, 0);
  return best;
}

// Cost of following the FIB hop by hop from `from` to the owner of `dst`.
uint64_t FollowedCost(const Topology& t, const RouteTable& routes,
                      const std::string& from, const V6Addr& dst,
                      const std::string& origin) {
  uint64_t cost = 0;
  std::string at = from;
  for (int i = 0; i < 32 && at != origin; ++i) {
    auto hop = routes.Lookup(at, dst);
    if (!hop) return kInf;
    for (const Link& l : t.links()) {
      if (l.name == hop->link) cost += l.cost;
    }
    at = hop->neighbor;
  }
  return at == origin ? cost : kInf;
}

TEST(TopologyTest, DefaultRouterSids) {
  Topology t = TeTestbed();
  EXPECT_EQ(t.RouterSid("R4"), V6("fcff:4::1"));
  EXPECT_EQ(t.RouterPrefix("R8")->ToString(), "fcff:8::/32");
  EXPECT_FALSE(t.RouterSid("worker1").has_value());
}

TEST(TopologyTest, RejectsBadLinks) {
  Topology t = TeTestbed();
  EXPECT_FALSE(t.AddLink({"L01", "R1", "R3", 1}).ok());
  EXPECT_FALSE(t.AddLink({"LX", "R1", "R9", 1}).ok());
  EXPECT_FALSE(t.AddLink({"LY", "R1", "R1", 1}).ok());
  EXPECT_FALSE(t.AddRouter("R1").ok());
}

TEST(RoutesTest, MatchBruteForceOnTestbed) {
  Topology t = TeTestbed();
  Advertisements adv = Loopbacks(t);
  auto routes = ComputeRoutes(t, adv);
  ASSERT_TRUE(routes.ok()) << routes.status();
  for (const auto& [prefix, origin] : adv) {
    V6Addr dst = std::get<V6Addr>(prefix.base()).Plus(1);
    if (prefix.length() == 128) dst = std::get<V6Addr>(prefix.base());
    for (const std::string& r : t.routers()) {
      if (r == origin) continue;
      EXPECT_EQ(FollowedCost(t, *routes, r, dst, origin),
                BruteForceCost(t, r, origin))
          << r << " -> " << prefix.ToString();
    }
  }
}

TEST(RoutesTest, MatchBruteForceOnRandomGraphs) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 40; ++trial) {
    Topology t;
    const int n = 3 + static_cast<int>(rng() % 6);
    for (int i = 1; i <= n; ++i) {
      ASSERT_TRUE(t.AddRouter("R" + std::to_string(i)).ok());
    }
    int link_id = 0;
    for (int i = 2; i <= n; ++i) {  // spanning chain keeps it connected
      int j = 1 + static_cast<int>(rng() % (i - 1));
      ASSERT_TRUE(
          t.AddLink({absl::StrCat("L", ++link_id), "R" + std::to_string(i),
                     "R" + std::to_string(j), 1 + rng() % 20})
              .ok());
    }
    for (int extra = static_cast<int>(rng() % 6); extra > 0; --extra) {
      int a = 1 + static_cast<int>(rng() % n);
      int b = 1 + static_cast<int>(rng() % n);
      if (a == b) continue;
      (void)t.AddLink({absl::StrCat("L", ++link_id), "R" + std::to_string(a),
                       "R" + std::to_string(b), 1 + rng() % 20});
    }
    Advertisements adv;
    for (const std::string& r : t.routers()) adv[*t.RouterPrefix(r)] = r;
    auto routes = ComputeRoutes(t, adv);
    ASSERT_TRUE(routes.ok()) << routes.status();
    for (const std::string& from : t.routers()) {
      for (const std::string& to : t.routers()) {
        if (from == to) continue;
        EXPECT_EQ(FollowedCost(t, *routes, from, *t.RouterSid(to), to),
                  BruteForceCost(t, from, to));
      }
    }
  }
}

TEST(RoutesTest, SingleLink) {
  Topology t;
  ASSERT_TRUE(t.AddRouter("R1").ok());
  ASSERT_TRUE(t.AddRouter("R2").ok());
  ASSERT_TRUE(t.AddLink({"ab", "R1", "R2", 5}).ok());
  auto routes = ComputeRoutes(t, {{*t.RouterPrefix("R2"), "R2"}});
  ASSERT_TRUE(routes.ok());
  auto hop = routes->Lookup("R1", V6("fcff:2::1"));
  ASSERT_TRUE(hop.has_value());
  EXPECT_EQ(hop->link, "ab");
  EXPECT_EQ(hop->neighbor, "R2");
}

TEST(RoutesTest, EqualCostTieBreaksOnLinkName) {
  Topology t;
  for (const char* r : {"R1", "R2", "R3", "R4"})
    ASSERT_TRUE(t.AddRouter(r).ok());
  ASSERT_TRUE(t.AddLink({"Lb", "R1", "R2", 1}).ok());
  ASSERT_TRUE(t.AddLink({"La", "R1", "R3", 1}).ok());
  ASSERT_TRUE(t.AddLink({"Lc", "R2", "R4", 1}).ok());
  ASSERT_TRUE(t.AddLink({"Ld", "R3", "R4", 1}).ok());
  auto routes = ComputeRoutes(t, {{*t.RouterPrefix("R4"), "R4"}});
  ASSERT_TRUE(routes.ok());
  EXPECT_EQ(routes->Lookup("R1", V6("fcff:4::1"))->link, "La");
}

TEST(RoutesTest, NodesNeverCarryTransit) {
  Topology t;
  ASSERT_TRUE(t.AddRouter("R1").ok());
  ASSERT_TRUE(t.AddRouter("R2").ok());
  ASSERT_TRUE(t.AddNode("n").ok());
  ASSERT_TRUE(t.AddLink({"a", "R1", "n", 1}).ok());
  ASSERT_TRUE(t.AddLink({"b", "n", "R2", 1}).ok());
  EXPECT_FALSE(ComputeRoutes(t, {{*t.RouterPrefix("R2"), "R2"}}).ok());
}

class ForwardTest : public ::testing::Test {
 protected:
  void SetUp() override {
    topo_ = TeTestbed();
    for (const std::string& r : topo_.routers()) {
      dps_[r]
          .InstallLocalSid({*topo_.RouterSid(r), Behavior::End(), 0})
          .IgnoreError();
    }
    Advertisements adv = Loopbacks(topo_);
    adv[P("fcdd::a683/128")] = "worker1";
    auto routes = ComputeRoutes(topo_, adv);
    ASSERT_TRUE(routes.ok());
    routes_ = *routes;
    for (auto& [name, fib] : routes_.per_vertex) {
      for (const auto& [prefix, hop] : fib.entries()) {
        dps_[name].AddRoute(prefix, hop);
      }
    }
    dps_["worker1"]
        .InstallLocalSid({V6("fcdd::a683"), Behavior::EndDT6(), 0})
        .IgnoreError();
    dps_["worker1"].AddTenantRoute(0, P("fd20:0:0:11::/64"), "pod");
    dps_["worker2"].SetEncapSource(V6("fd12::1000"));
  }

  TraceRecord Send(std::vector<V6Addr> path, uint8_t hop_limit = 64) {
    NodeDataplane& head = dps_["worker2"];
    head.InstallPolicy({V6("cafe::1"), path, Family::kV6, 0}).IgnoreError();
    InnerPacket inner;
    inner.family = Family::kV6;
    inner.src = V6("fd20:0:0:12::");
    inner.dst = V6("fd20:0:0:11::");
    OuterPacket outer = *head.HEncaps(inner, V6("cafe::1"));
    outer.hop_limit = hop_limit;
    auto resolve = [this](const std::string& v) -> NodeDataplane* {
      auto it = dps_.find(v);
      return it == dps_.end() ? nullptr : &it->second;
    };
    return ForwardPacket(topo_, routes_, resolve, "worker2", outer);
  }

  Topology topo_;
  RouteTable routes_;
  std::map<std::string, NodeDataplane> dps_;
};

TEST_F(ForwardTest, WaypointsFollowPolicy) {
  TraceRecord t = Send({V6("fcff:4::1"), V6("fcff:3::1"), V6("fcdd::a683")});
  ASSERT_TRUE(t.ok()) << FormatTrace(t);
  EXPECT_EQ(t.delivered_at, "worker1");
  EXPECT_EQ(Waypoints(t), (std::vector<std::string>{"R4", "R3"}));

  t = Send(
      {V6("fcff:7::1"), V6("fcff:2::1"), V6("fcff:3::1"), V6("fcdd::a683")});
  ASSERT_TRUE(t.ok()) << FormatTrace(t);
  EXPECT_EQ(Waypoints(t), (std::vector<std::string>{"R7", "R2", "R3"}));
}

TEST_F(ForwardTest, NoWaypointsWithoutTransitSegments) {
  TraceRecord t = Send({V6("fcdd::a683")});
  ASSERT_TRUE(t.ok()) << FormatTrace(t);
  EXPECT_TRUE(Waypoints(t).empty());
}

TEST_F(ForwardTest, HopLimitExpires) {
  TraceRecord t = Send({V6("fcff:4::1"), V6("fcff:3::1"), V6("fcdd::a683")}, 1);
  EXPECT_FALSE(t.ok());
  EXPECT_EQ(t.drop_reason, "ttl");
}

TEST_F(ForwardTest, Deterministic) {
  std::vector<V6Addr> path = {V6("fcff:5::1"), V6("fcff:3::1"),
                              V6("fcdd::a683")};
  EXPECT_EQ(FormatTrace(Send(path)), FormatTrace(Send(path)));
}

}  // namespace
}  // namespace srv6k8s
