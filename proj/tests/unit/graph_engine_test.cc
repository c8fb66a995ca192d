// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

#include "srv6k8s/graph_engine.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "test_util.h"

namespace srv6k8s {
namespace {

using testing::P;
using testing::V4;
using testing::V6;

// A node with a steered v4 and v6 destination, a local pod, an End SID, a
// DT4 SID and a route toward the encap next hop.
class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dp_.SetEncapSource(V6("fd12::1000"));
    ASSERT_TRUE(dp_.InstallPolicy({V6("cafe::1c2"),
                                   {V6("fcff:4::1"), V6("fcdd::a682")},
                                   Family::kV4,
                                   0})
                    .ok());
    ASSERT_TRUE(dp_.InstallPolicy({V6("cafe::1c3"),
                                   {V6("fcff:4::1"), V6("fcdd::a683")},
                                   Family::kV6,
                                   0})
                    .ok());
    ASSERT_TRUE(
        dp_.InstallSteering({P("172.16.104.0/26"), V6("cafe::1c2")}).ok());
    ASSERT_TRUE(
        dp_.InstallSteering({P("fd20:0:0:11::/64"), V6("cafe::1c3")}).ok());
    ASSERT_TRUE(
        dp_.InstallLocalSid({V6("fcff:8::1"), Behavior::End(), 0}).ok());
    ASSERT_TRUE(
        dp_.InstallLocalSid({V6("fcdd::b04"), Behavior::EndDT4(), 0}).ok());
    dp_.AddRoute(P("fcff:4::/32"), {"L04", "R4"});
    dp_.AddRoute(P("fcff:3::/32"), {"L04", "R4"});
    dp_.AddTenantRoute(0, P("172.16.104.64/32"), "pod-local");
  }

  WorkItem RandomItem(std::mt19937_64& rng) {
    WorkItem item;
    InnerPacket inner = testing::RandomInner(rng);
    switch (rng() % 6) {
      case 0:  // steered v4
        inner.family = Family::kV4;
        inner.src = V4("172.16.104.64");
        inner.dst = V4Addr(V4("172.16.104.0").bits() + rng() % 64);
        item.packet = inner;
        break;
      case 1:  // steered v6
        inner.family = Family::kV6;
        inner.src = V6("fd20:0:0:12::");
        inner.dst = V6("fd20:0:0:11::").Plus(rng() % 1000);
        item.packet = inner;
        break;
      case 2:  // local pod
        inner.family = Family::kV4;
        inner.src = V4("172.16.166.128");
        inner.dst = V4("172.16.104.64");
        item.packet = inner;
        break;
      case 3:  // no steering match, or a malformed packet
        if (rng() % 8 == 0) inner.src = V4("10.0.0.1");
        item.packet = inner;
        break;
      case 4: {  // transit End
        OuterPacket o;
        o.src = V6("fd10::1000");
        o.srh = *Srh::Make(kProtoIpv4, {V6("fcdd::a682"), V6("fcff:8::1")}, 1);
        o.next_header = kProtoRouting;
        o.dst = V6("fcff:8::1");
        inner.family = Family::kV4;
        inner.src = V4Addr(static_cast<uint32_t>(rng()));
        inner.dst = V4Addr(static_cast<uint32_t>(rng()));
        o.inner = EncodeInner(inner);
        item.packet = o;
        break;
      }
      default: {  // decap toward the local pod or a missing tenant route
        OuterPacket o;
        o.src = V6("fd10::1000");
        o.srh = *Srh::Make(kProtoIpv4, {V6("fcdd::b04")}, 0);
        o.next_header = kProtoRouting;
        o.dst = V6("fcdd::b04");
        inner.family = Family::kV4;
        inner.dst = rng() % 2 ? V4("172.16.104.64") : V4("10.9.9.9");
        inner.src = V4("172.16.166.128");
        o.inner = EncodeInner(inner);
        item.packet = o;
        break;
      }
    }
    return item;
  }

  NodeDataplane dp_{"worker2"};
};

TEST_F(PipelineTest, VectorMatchesScalarOracle) {
  for (bool memo : {false, true}) {
    auto graph = BuildNodeGraph(dp_, {.memoize_steering = memo});
    ASSERT_TRUE(graph.ok()) << graph.status();
    std::mt19937_64 rng(memo ? 1 : 2);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<WorkItem> items(1 + rng() % kMaxVectorSize);
      for (auto& it : items) it = RandomItem(rng);
      std::vector<TerminalDisposition> scalar;
      for (const WorkItem& it : items) {
        auto d = graph->RunScalar(it);
        ASSERT_TRUE(d.ok()) << d.status();
        scalar.push_back(*d);
      }
      auto vec = graph->RunVector(items);
      ASSERT_TRUE(vec.ok()) << vec.status();
      ASSERT_EQ(vec->size(), items.size());
      for (size_t i = 0; i < items.size(); ++i) {
        EXPECT_EQ((*vec)[i].kind, scalar[i].kind);
        EXPECT_EQ((*vec)[i].detail, scalar[i].detail);
        EXPECT_EQ((*vec)[i].bytes, scalar[i].bytes);
      }
      EXPECT_LE(graph->stats().max_subvector, kMaxVectorSize);
    }
  }
}

TEST_F(PipelineTest, DispositionsByKind) {
  auto graph = BuildNodeGraph(dp_);
  ASSERT_TRUE(graph.ok());
  InnerPacket steered;
  steered.src = V4("172.16.104.64");
  steered.dst = V4("172.16.104.5");
  InnerPacket local = steered;
  local.dst = V4("172.16.104.64");
  InnerPacket stray = steered;
  stray.dst = V4("8.8.8.8");
  std::vector<WorkItem> items(3);
  items[0].packet = steered;
  items[1].packet = local;
  items[2].packet = stray;
  auto out = graph->RunVector(items);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ((*out)[0].kind, TerminalDisposition::Kind::kTx);
  EXPECT_EQ((*out)[0].detail, "L04");
  auto outer = DecodeOuter((*out)[0].bytes);
  ASSERT_TRUE(outer.ok());
  EXPECT_EQ(outer->dst, V6("fcff:4::1"));
  EXPECT_EQ(outer->src, V6("fd12::1000"));
  EXPECT_EQ((*out)[1].kind, TerminalDisposition::Kind::kDeliver);
  EXPECT_EQ((*out)[1].detail, "pod-local");
  EXPECT_EQ((*out)[2].kind, TerminalDisposition::Kind::kDrop);
  EXPECT_EQ((*out)[2].detail, "no steering match");
}

TEST_F(PipelineTest, FullVectorOfIdenticalPackets) {
  auto graph = BuildNodeGraph(dp_);
  ASSERT_TRUE(graph.ok());
  InnerPacket p;
  p.src = V4("172.16.104.64");
  p.dst = V4("172.16.104.5");
  std::vector<WorkItem> items(kMaxVectorSize);
  for (auto& it : items) it.packet = p;
  auto out = graph->RunVector(items);
  ASSERT_TRUE(out.ok());
  for (const auto& d : *out) {
    EXPECT_EQ(d.kind, TerminalDisposition::Kind::kTx);
    EXPECT_EQ(d.bytes, out->front().bytes);
  }
  EXPECT_EQ(dp_.FindPolicy(V6("cafe::1c2"))->tx_counter, kMaxVectorSize);
  items.emplace_back();
  EXPECT_FALSE(graph->RunVector(items).ok());
  EXPECT_FALSE(graph->RunVector({}).ok());
}

TEST(GraphTest, ValidationErrors) {
  Graph empty;
  EXPECT_FALSE(empty.Validate().ok());

  auto pass = [](std::string next) {
    return [next](std::span<WorkItem> items) {
      return std::vector<NodeResult>(items.size(), NodeResult::To(next));
    };
  };
  Graph cyclic;
  ASSERT_TRUE(cyclic.AddNode({"a", {"b"}, pass("b")}).ok());
  ASSERT_TRUE(cyclic.AddNode({"b", {"a"}, pass("a")}).ok());
  cyclic.SetEntry("a");
  EXPECT_FALSE(cyclic.Validate().ok());

  Graph dangling;
  ASSERT_TRUE(dangling.AddNode({"a", {"missing"}, pass("missing")}).ok());
  dangling.SetEntry("a");
  EXPECT_FALSE(dangling.Validate().ok());
  EXPECT_FALSE(dangling.AddNode({"a", {}, pass("x")}).ok());
}

TEST(BenchTest, CsvAndRejections) {
  BenchFixture fx = MakeEncapBenchFixture();
  auto graph = BuildNodeGraph(*fx.dataplane);
  ASSERT_TRUE(graph.ok());
  EXPECT_FALSE(BenchDispatch(*graph, fx.workload, 0, 1).ok());
  EXPECT_FALSE(BenchDispatch(*graph, fx.workload, 10, 0).ok());
  EXPECT_FALSE(BenchDispatch(*graph, fx.workload, 10, 257).ok());
  std::vector<BenchRow> rows;
  for (size_t b : {1, 256}) {
    auto row = BenchDispatch(*graph, fx.workload, 5000, b);
    ASSERT_TRUE(row.ok());
    EXPECT_EQ(row->packets, 5000u);
    rows.push_back(*row);
  }
  std::string csv = BenchCsv(rows);
  EXPECT_EQ(csv.rfind("batch,packets,seconds,pps\n", 0), 0u);
  size_t at = csv.find("# ratio,");
  ASSERT_NE(at, std::string::npos);
  double ratio = std::stod(csv.substr(at + 8));
  EXPECT_GT(ratio, 0);
  EXPECT_TRUE(std::isfinite(ratio));
}

TEST(BenchTest, SmokeRunHasNoDrops) {
  BenchFixture fx = MakeEncapBenchFixture();
  auto graph = BuildNodeGraph(*fx.dataplane);
  ASSERT_TRUE(graph.ok());
  size_t tx = 0;
  for (size_t start = 0; start < 100000; start += kMaxVectorSize) {
    std::vector<WorkItem> batch;
    for (size_t i = start; i < std::min<size_t>(start + kMaxVectorSize, 100000);
         ++i) {
      batch.push_back(fx.workload[i % fx.workload.size()]);
    }
    auto out = graph->RunVector(std::move(batch));
    ASSERT_TRUE(out.ok());
    for (const auto& d : *out) tx += d.kind == TerminalDisposition::Kind::kTx;
  }
  EXPECT_EQ(tx, 100000u);
}

}  // namespace
}  // namespace srv6k8s
