// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

#include "srv6k8s/sr_dataplane.h"

#include <random>

#include "gtest/gtest.h"
#include "test_util.h"

namespace srv6k8s {
namespace {

using testing::P;
using testing::V4;
using testing::V6;

InnerPacket V4Packet(const char* src, const char* dst) {
  InnerPacket p;
  p.family = Family::kV4;
  p.src = V4(src);
  p.dst = V4(dst);
  p.payload = {1, 2, 3, 4, 5};
  return p;
}

SrPolicyEntry Worker2V4Policy() {
  return {V6("cafe::4"),
          {V6("fcff:5::1"), V6("fcff:7::1"), V6("fcff:8::1"),
           V6("fcdd::12aa:d460:b250:45:b04")},
          Family::kV4,
          0};
}

TEST(BehaviorTest, CodePoints) {
  EXPECT_EQ(Behavior::End().code(), 1);
  EXPECT_EQ(Behavior::EndX(V6("fe80::1")).code(), 5);
  EXPECT_EQ(Behavior::EndDT6().code(), 18);
  EXPECT_EQ(Behavior::EndDT4().code(), 19);
}

TEST(NodeDataplaneTest, PolicyListedOnce) {
  NodeDataplane dp("worker1");
  ASSERT_TRUE(dp.InstallPolicy(Worker2V4Policy()).ok());
  uint64_t gen = dp.generation();
  ASSERT_TRUE(dp.InstallPolicy(Worker2V4Policy()).ok());
  EXPECT_EQ(dp.generation(), gen);
  EXPECT_EQ(dp.policies().size(), 1u);
  EXPECT_EQ(dp.ShowPolicies(),
            "bsid cafe::4 family v4 segments < fcff:5::1 fcff:7::1 fcff:8::1 "
            "fcdd::12aa:d460:b250:45:b04 >\n");
}

TEST(NodeDataplaneTest, DanglingSteeringRejected) {
  NodeDataplane dp;
  absl::Status s = dp.InstallSteering({P("172.16.166.128/26"), V6("cafe::99")});
  EXPECT_FALSE(s.ok());
  EXPECT_NE(s.message().find("dangling policy"), absl::string_view::npos);

  ASSERT_TRUE(dp.InstallPolicy(Worker2V4Policy()).ok());
  EXPECT_FALSE(dp.InstallSteering({P("fd20:0:0:12::/64"), V6("cafe::4")}).ok());
}

TEST(NodeDataplaneTest, RemovePolicyWhileSteeredFails) {
  NodeDataplane dp;
  ASSERT_TRUE(dp.InstallPolicy(Worker2V4Policy()).ok());
  ASSERT_TRUE(dp.InstallSteering({P("172.16.104.64/26"), V6("cafe::4")}).ok());
  EXPECT_FALSE(dp.RemovePolicy(V6("cafe::4")).ok());
  EXPECT_TRUE(dp.RemoveSteering(P("172.16.104.64/26")));
  EXPECT_TRUE(dp.RemovePolicy(V6("cafe::4")).ok());
}

TEST(NodeDataplaneTest, SteeringLongestPrefix) {
  NodeDataplane dp;
  ASSERT_TRUE(dp.InstallPolicy(Worker2V4Policy()).ok());
  SrPolicyEntry wide = Worker2V4Policy();
  wide.bsid = V6("cafe::40");
  ASSERT_TRUE(dp.InstallPolicy(wide).ok());
  ASSERT_TRUE(dp.InstallSteering({P("172.16.104.64/26"), V6("cafe::4")}).ok());
  EXPECT_EQ(dp.SteerLookup(V4("172.16.104.70")), V6("cafe::4"));
  ASSERT_TRUE(dp.InstallSteering({P("172.16.104.0/24"), V6("cafe::40")}).ok());
  EXPECT_EQ(dp.SteerLookup(V4("172.16.104.70")), V6("cafe::4"));
  EXPECT_EQ(dp.SteerLookup(V4("172.16.104.10")), V6("cafe::40"));
  EXPECT_FALSE(dp.SteerLookup(V4("10.0.0.1")).has_value());
}

TEST(NodeDataplaneTest, HEncapsReversesSegments) {
  NodeDataplane dp;
  V6Addr s1 = V6("fcff:1::1"), s2 = V6("fcff:2::1"), s3 = V6("fcff:3::1");
  dp.SetEncapSource(V6("fd10::1000"));
  ASSERT_TRUE(
      dp.InstallPolicy({V6("cafe::1"), {s1, s2, s3}, Family::kV4, 0}).ok());
  auto outer =
      dp.HEncaps(V4Packet("172.16.166.128", "172.16.104.0"), V6("cafe::1"));
  ASSERT_TRUE(outer.ok()) << outer.status();
  ASSERT_TRUE(outer->srh.has_value());
  EXPECT_EQ(outer->srh->segment_list(), (std::vector<V6Addr>{s3, s2, s1}));
  EXPECT_EQ(outer->srh->segments_left(), 2);
  EXPECT_EQ(outer->dst, s1);
  EXPECT_EQ(outer->src, V6("fd10::1000"));
  EXPECT_EQ(dp.FindPolicy(V6("cafe::1"))->tx_counter, 1u);
}

TEST(NodeDataplaneTest, SingleSegmentPolicy) {
  NodeDataplane dp;
  dp.SetEncapSource(V6("fd10::1000"));
  V6Addr dt = V6("fcdd::11aa:c11:b42f:f17e:a682");
  ASSERT_TRUE(dp.InstallPolicy({V6("cafe::1"), {dt}, Family::kV4, 0}).ok());
  auto outer = dp.HEncaps(V4Packet("1.1.1.1", "2.2.2.2"), V6("cafe::1"));
  ASSERT_TRUE(outer.ok());
  EXPECT_EQ(outer->srh->segment_list().size(), 1u);
  EXPECT_EQ(outer->srh->segments_left(), 0);
  EXPECT_EQ(outer->dst, dt);
}

TEST(NodeDataplaneTest, EndAdvancesSegment) {
  NodeDataplane head, r1;
  V6Addr s1 = V6("fcff:1::1"), s2 = V6("fcff:2::1"), s3 = V6("fcff:3::1");
  head.SetEncapSource(V6("fd10::1000"));
  ASSERT_TRUE(
      head.InstallPolicy({V6("cafe::1"), {s1, s2, s3}, Family::kV4, 0}).ok());
  ASSERT_TRUE(r1.InstallLocalSid({s1, Behavior::End(), 0}).ok());
  auto outer = head.HEncaps(V4Packet("1.1.1.1", "2.2.2.2"), V6("cafe::1"));
  ASSERT_TRUE(outer.ok());
  Disposition d = r1.ProcessLocal(*outer);
  auto* fwd = std::get_if<Forward>(&d);
  ASSERT_NE(fwd, nullptr) << DispositionName(d);
  EXPECT_EQ(fwd->packet.srh->segments_left(), 1);
  EXPECT_EQ(fwd->packet.dst, s2);
  EXPECT_EQ(r1.FindLocalSid(s1)->rx_counter, 1u);
}

TEST(NodeDataplaneTest, PrematureDecapDropped) {
  NodeDataplane head, tail;
  V6Addr dt = V6("fcdd::1");
  head.SetEncapSource(V6("fd10::1000"));
  ASSERT_TRUE(
      head.InstallPolicy({V6("cafe::1"), {dt, V6("fcff:9::1")}, Family::kV4, 0})
          .ok());
  ASSERT_TRUE(tail.InstallLocalSid({dt, Behavior::EndDT4(), 0}).ok());
  auto outer = head.HEncaps(V4Packet("1.1.1.1", "2.2.2.2"), V6("cafe::1"));
  ASSERT_TRUE(outer.ok());
  Disposition d = tail.ProcessLocal(*outer);
  ASSERT_TRUE(std::holds_alternative<Drop>(d));
  EXPECT_EQ(std::get<Drop>(d).reason, "premature decap");
}

TEST(NodeDataplaneTest, FibLookup) {
  NodeDataplane dp;
  ASSERT_TRUE(dp.InstallLocalSid({V6("fcff:3::1"), Behavior::End(), 0}).ok());
  dp.AddRoute(P("fcff:4::/32"), {"L03", "R4"});
  EXPECT_EQ(dp.FibLookup(V6("fcff:3::1")).kind, FibResult::Kind::kLocal);
  FibResult r = dp.FibLookup(V6("fcff:4::1"));
  EXPECT_EQ(r.kind, FibResult::Kind::kNextHop);
  EXPECT_EQ(r.via.link, "L03");
  EXPECT_EQ(dp.FibLookup(V6("2001:db8::1")).kind, FibResult::Kind::kNone);
}

// Encap, k-1 End hops, then DT at the tail must return the original bytes;
// the hop count and the active segment follow SL = n-1-i after hop i.
TEST(NodeDataplaneTest, EncapDecapInversionProperty) {
  std::mt19937_64 rng(2026);
  for (int trial = 0; trial < 300; ++trial) {
    InnerPacket inner = testing::RandomInner(rng);
    size_t k = 1 + rng() % 5;
    std::vector<V6Addr> path(k);
    for (auto& s : path) s = testing::RandomV6(rng);
    std::vector<NodeDataplane> hops(k);
    for (size_t i = 0; i + 1 < k; ++i) {
      ASSERT_TRUE(hops[i].InstallLocalSid({path[i], Behavior::End(), 0}).ok());
    }
    ASSERT_TRUE(
        hops[k - 1]
            .InstallLocalSid({path[k - 1], Behavior::EndDT(inner.family), 0})
            .ok());
    hops[k - 1].AddTenantRoute(0, Prefix::HostRoute(inner.dst), "pod");

    NodeDataplane head;
    head.SetEncapSource(testing::RandomV6(rng));
    ASSERT_TRUE(
        head.InstallPolicy({V6("cafe::1"), path, inner.family, 0}).ok());
    auto outer = head.HEncaps(inner, V6("cafe::1"));
    ASSERT_TRUE(outer.ok());
    OuterPacket pkt = *outer;
    for (size_t i = 0; i + 1 < k; ++i) {
      Disposition d = hops[i].ProcessLocal(pkt);
      ASSERT_TRUE(std::holds_alternative<Forward>(d)) << DispositionName(d);
      pkt = std::get<Forward>(d).packet;
      EXPECT_EQ(pkt.srh->segments_left(), k - 2 - i);
      EXPECT_EQ(pkt.dst, path[i + 1]);
    }
    Disposition d = hops[k - 1].ProcessLocal(pkt);
    ASSERT_TRUE(std::holds_alternative<Deliver>(d)) << DispositionName(d);
    EXPECT_EQ(EncodeInner(std::get<Deliver>(d).packet), EncodeInner(inner));
    EXPECT_EQ(std::get<Deliver>(d).egress, "pod");
  }
}

TEST(NodeDataplaneTest, CounterLaw) {
  std::mt19937_64 rng(5);
  NodeDataplane dp;
  std::vector<V6Addr> sids;
  for (int i = 0; i < 4; ++i) {
    sids.push_back(testing::RandomV6(rng));
    ASSERT_TRUE(dp.InstallLocalSid({sids.back(), Behavior::End(), 0}).ok());
  }
  uint64_t sent = 0;
  for (int i = 0; i < 200; ++i) {
    OuterPacket p;
    V6Addr target = sids[rng() % sids.size()];
    p.srh = *Srh::Make(kProtoIpv4, {target, target}, 1);
    p.next_header = kProtoRouting;
    p.dst = target;
    dp.ProcessLocal(p);
    ++sent;
  }
  uint64_t total = 0;
  for (const auto& [sid, entry] : dp.localsids()) total += entry.rx_counter;
  EXPECT_EQ(total, sent);
  EXPECT_EQ(dp.processed(), sent);
}

TEST(NodeDataplaneTest, SingleAndDoubleSegmentDifferBy16Bytes) {
  std::mt19937_64 rng(9);
  V6Addr router = V6("fcff:3::1");
  V6Addr dt = V6("fcdd::11aa:c11:b42f:f17e:a682");
  for (int i = 0; i < 100; ++i) {
    InnerPacket inner = testing::RandomInner(rng);
    NodeDataplane head;
    head.SetEncapSource(V6("fd12::1000"));
    ASSERT_TRUE(
        head.InstallPolicy({V6("cafe::1"), {dt}, inner.family, 0}).ok());
    ASSERT_TRUE(
        head.InstallPolicy({V6("cafe::2"), {router, dt}, inner.family, 0})
            .ok());
    auto single = head.HEncaps(inner, V6("cafe::1"));
    auto twice = head.HEncaps(inner, V6("cafe::2"));
    ASSERT_TRUE(single.ok() && twice.ok());
    EXPECT_EQ(EncodeOuter(*twice).size() - EncodeOuter(*single).size(), 16u);
    EXPECT_EQ(single->inner, twice->inner);
  }
}

}  // namespace
}  // namespace srv6k8s
