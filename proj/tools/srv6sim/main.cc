// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

// srv6sim: loads a scenario, converges it and runs one command.
//
// Exit codes: 0 ok, 1 failed expectation or non-convergence, 2 usage or
// input errors.

#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "srv6k8s/scenario.h"
#include "srv6k8s/simulation.h"

namespace srv6k8s {
namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct Options {
  std::string scenario;
  std::string mode;
  std::optional<uint64_t> seed;
  std::vector<std::string> inject;  // applied before the command
  std::vector<std::string> apply;

  std::string src;
  std::string dst;
  size_t count = 4;
  std::string family;
  std::optional<size_t> expect_delivered;
  std::string expect_waypoints;
  std::string expect_summary;
  std::string node;
  std::string what = "localsids";
  std::vector<std::string> files;
  size_t pairs_count = 0;
  bool events = false;
  size_t packets = 100000;
  std::vector<size_t> batches = {1, 256};
};

int Fail(const absl::Status& s) {
  std::cerr << "error: " << s.message() << "\n";
  return s.code() == absl::StatusCode::kDeadlineExceeded ? kFailed : kUsage;
}

int Expect(bool ok, const std::string& what) {
  if (ok) return kOk;
  std::cerr << "expectation failed: " << what << "\n";
  return kFailed;
}

absl::StatusOr<std::optional<Family>> ParseFamilyFlag(const std::string& f) {
  if (f.empty()) return std::optional<Family>();
  if (f == "v4" || f == "ipv4") return std::optional<Family>(Family::kV4);
  if (f == "v6" || f == "ipv6") return std::optional<Family>(Family::kV6);
  return absl::InvalidArgumentError(
      absl::StrCat("--family '", f, "' is not v4 or v6"));
}

absl::StatusOr<ChangeSummary> InjectFile(Simulation& sim,
                                         const std::string& path) {
  auto text = ReadTextFile(path);
  if (!text.ok()) return text.status();
  auto update = ParsePolicyFile(*text);
  if (!update.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": ", update.status().message()));
  }
  return sim.Inject(*update);
}

absl::StatusOr<ChangeSummary> ApplyFile(Simulation& sim,
                                        const std::string& path) {
  auto text = ReadTextFile(path);
  if (!text.ok()) return text.status();
  auto summary = sim.ApplyConfigMap(*text);
  if (!summary.ok() &&
      summary.status().code() == absl::StatusCode::kInvalidArgument) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": ", summary.status().message()));
  }
  return summary;
}

absl::StatusOr<std::unique_ptr<Simulation>> Load(const Options& opt) {
  if (opt.scenario.empty()) {
    return absl::InvalidArgumentError("--scenario is required");
  }
  auto sc = LoadScenarioFile(opt.scenario);
  if (!sc.ok()) return sc.status();
  if (!opt.mode.empty()) {
    auto mode = ParseMode(opt.mode);
    if (!mode.ok()) return mode.status();
    sc->mode = *mode;
  }
  if (opt.seed) sc->seed = *opt.seed;
  auto sim = Simulation::Create(*std::move(sc));
  if (!sim.ok()) return sim.status();
  for (const std::string& f : opt.inject) {
    auto s = InjectFile(**sim, f);
    if (!s.ok()) return s.status();
  }
  for (const std::string& f : opt.apply) {
    auto s = ApplyFile(**sim, f);
    if (!s.ok()) return s.status();
  }
  return sim;
}

int RunCommand(const std::string& cmd, const Options& opt) {
  if (cmd == "bench") {
    auto csv = RunBench(opt.packets, opt.batches);
    if (!csv.ok()) return Fail(csv.status());
    std::cout << *csv;
    return kOk;
  }
  auto family = ParseFamilyFlag(opt.family);
  if (!family.ok()) return Fail(family.status());
  auto loaded = Load(opt);
  if (!loaded.ok()) return Fail(loaded.status());
  Simulation& sim = **loaded;

  if (cmd == "run") {
    std::cout << "scenario " << sim.scenario().name << " converged: mode "
              << ModeName(sim.scenario().mode)
              << ", tunnels v4=" << sim.TunnelCount(Family::kV4)
              << " v6=" << sim.TunnelCount(Family::kV6) << ", "
              << sim.events().size() << " events, t=" << sim.time() << "\n";
    if (opt.events) std::cout << sim.FormatEvents();
    return kOk;
  }
  if (cmd == "ping") {
    auto r = sim.Ping(opt.src, opt.dst, opt.count, *family);
    if (!r.ok()) return Fail(r.status());
    std::cout << FormatPing(*r);
    if (opt.expect_delivered) {
      return Expect(r->delivered == *opt.expect_delivered,
                    absl::StrCat("delivered ", r->delivered, ", want ",
                                 *opt.expect_delivered));
    }
    return kOk;
  }
  if (cmd == "trace") {
    auto t = sim.Trace(opt.src, opt.dst, *family);
    if (!t.ok()) return Fail(t.status());
    std::cout << FormatTrace(*t);
    std::string waypoints = absl::StrJoin(Waypoints(*t), ",");
    std::cout << "waypoints [" << waypoints << "] "
              << (t->ok() ? "delivered at " + t->delivered_at
                          : "dropped: " + t->drop_reason)
              << "\n";
    if (!opt.expect_waypoints.empty()) {
      return Expect(waypoints == opt.expect_waypoints,
                    absl::StrCat("waypoints [", waypoints, "], want [",
                                 opt.expect_waypoints, "]"));
    }
    return kOk;
  }
  if (cmd == "show") {
    auto what = ParseShowWhat(opt.what);
    if (!what.ok()) return Fail(what.status());
    auto text = sim.Show(opt.node, *what);
    if (!text.ok()) return Fail(text.status());
    std::cout << *text;
    return kOk;
  }
  if (cmd == "inject" || cmd == "apply-configmap") {
    ChangeSummary total;
    for (const std::string& f : opt.files) {
      auto s = cmd == "inject" ? InjectFile(sim, f) : ApplyFile(sim, f);
      if (!s.ok()) return Fail(s.status());
      std::cout << f << ": " << s->ToString() << "\n";
      total.added += s->added;
      total.replaced += s->replaced;
      total.removed += s->removed;
    }
    if (!opt.expect_summary.empty()) {
      return Expect(total.ToString() == opt.expect_summary,
                    absl::StrCat("summary '", total.ToString(), "', want '",
                                 opt.expect_summary, "'"));
    }
    return kOk;
  }
  if (cmd == "report") {
    if (opt.pairs_count > 0) {
      for (const PodSpec& a : sim.scenario().pods) {
        for (const PodSpec& b : sim.scenario().pods) {
          if (a.name == b.name) continue;
          for (Family f : {Family::kV4, Family::kV6}) {
            if (!sim.PodAddress(a.name, f) || !sim.PodAddress(b.name, f)) {
              continue;
            }
            auto r = sim.Ping(a.name, b.name, opt.pairs_count, f);
            if (!r.ok()) return Fail(r.status());
          }
        }
      }
    }
    std::cout << sim.ReportJson();
    return kOk;
  }
  std::cerr << "unknown command " << cmd << "\n";
  return kUsage;
}

int Main(int argc, char** argv) {
  Options opt;
  CLI::App app{"SRv6 overlay simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--scenario", opt.scenario, "Scenario file");
  app.add_option("--mode", opt.mode, "Override mode: bgp or configmap");
  app.add_option("--seed", opt.seed, "Override the scheduler seed");
  app.add_option("--inject", opt.inject,
                 "Policy file injected before the command (repeatable)");
  app.add_option("--apply", opt.apply,
                 "ConfigMap file applied before the command (repeatable)");

  auto* run = app.add_subcommand("run", "Converge and print a summary");
  run->add_flag("--events", opt.events, "Print the event log");

  auto add_pair = [&](CLI::App* c) {
    c->add_option("--src", opt.src, "Source pod")->required();
    c->add_option("--dst", opt.dst, "Destination pod")->required();
    c->add_option("--family", opt.family, "v4 or v6");
  };
  auto* ping = app.add_subcommand("ping", "Send packets between two pods");
  add_pair(ping);
  ping->add_option("--count,-c", opt.count, "Packets")
      ->check(CLI::PositiveNumber);
  ping->add_option("--expect-delivered", opt.expect_delivered,
                   "Exit 1 unless exactly this many are delivered");

  auto* trace = app.add_subcommand("trace", "Trace one packet");
  add_pair(trace);
  trace->add_option("--expect-waypoints", opt.expect_waypoints,
                    "Comma-separated waypoint routers to require");

  auto* show = app.add_subcommand("show", "Print dataplane state");
  show->add_option("--node", opt.node, "Node or router")->required();
  show->add_option("--what", opt.what,
                   "localsids, policies, steering or encap-source");

  auto* inject = app.add_subcommand("inject", "Inject policy files (bgp)");
  inject->add_option("files", opt.files, "Policy files")->required();
  inject->add_option("--expect", opt.expect_summary,
                     "Exit 1 unless the summary matches");
  auto* apply = app.add_subcommand("apply-configmap",
                                   "Apply ConfigMap files (configmap)");
  apply->add_option("files", opt.files, "ConfigMap files")->required();
  apply->add_option("--expect", opt.expect_summary,
                    "Exit 1 unless the summary matches");

  auto* report = app.add_subcommand("report", "Print JSON metrics");
  report->add_option("--ping-all", opt.pairs_count,
                     "Ping every pod pair with this many packets first");

  auto* bench = app.add_subcommand("bench", "Vector vs scalar dispatch CSV");
  bench->add_option("--packets", opt.packets, "Packets per batch size")
      ->check(CLI::PositiveNumber);
  bench->add_option("--batch", opt.batches, "Batch sizes (1..256)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  return RunCommand(app.get_subcommands().front()->get_name(), opt);
}

}  // namespace
}  // namespace srv6k8s

int main(int argc, char** argv) { return srv6k8s::Main(argc, argv); }
