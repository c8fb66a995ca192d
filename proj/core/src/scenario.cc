// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

#include "srv6k8s/scenario.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "yaml_util.h"

namespace srv6k8s {
namespace {

const std::set<std::string>& TopLevelKeys() {
  static const auto* keys = new std::set<std::string>{
      "name",          "mode",          "seed",
      "segment_mode",  "auto_policies", "configmap_layout",
      "poll_interval", "max_steps",     "routers",
      "links",         "nodes",         "ippools",
      "bsid_pool",     "pods",          "injector",
      "policies",      "configmap"};
  return *keys;
}

absl::StatusOr<Family> ParseFamily(const YAML::Node& node,
                                   absl::string_view path) {
  auto text = yaml::Scalar(node, path);
  if (!text.ok()) return text.status();
  if (*text == "v4" || *text == "IPv4") return Family::kV4;
  if (*text == "v6" || *text == "IPv6") return Family::kV6;
  return yaml::Error(node, path,
                     absl::StrCat("family '", *text, "' is not v4 or v6"));
}

// Either an inline value or a file name to read it from.
absl::StatusOr<std::string> InlineOrFile(const YAML::Node& node,
                                         absl::string_view path,
                                         const std::string& base_dir) {
  if (node.IsScalar()) {
    std::filesystem::path file(node.Scalar());
    if (file.is_relative()) file = std::filesystem::path(base_dir) / file;
    auto text = ReadTextFile(file.string());
    if (!text.ok()) return yaml::Error(node, path, text.status().message());
    return *text;
  }
  YAML::Emitter e;
  e << node;
  return std::string(e.c_str());
}

std::vector<YAML::Node> AsList(const YAML::Node& node) {
  std::vector<YAML::Node> out;
  if (!node.IsDefined() || node.IsNull()) return out;
  if (node.IsSequence()) {
    for (const YAML::Node& n : node) out.push_back(n);
  } else {
    out.push_back(node);
  }
  return out;
}

absl::Status ParseBody(const YAML::Node& root, const std::string& base_dir,
                       Scenario& sc) {
  if (!root.IsMap()) return yaml::Error(root, "scenario", "expected a mapping");
  for (const auto& kv : root) {
    std::string key = kv.first.as<std::string>();
    if (!TopLevelKeys().contains(key)) {
      return yaml::Error(kv.first, key, "unknown scenario field");
    }
  }

  if (YAML::Node n = root["name"]; n.IsDefined()) {
    auto v = yaml::Scalar(n, "name");
    if (!v.ok()) return v.status();
    sc.name = *v;
  }
  if (YAML::Node n = root["mode"]; n.IsDefined()) {
    auto v = yaml::Scalar(n, "mode");
    if (!v.ok()) return v.status();
    auto mode = ParseMode(*v);
    if (!mode.ok()) return yaml::Error(n, "mode", mode.status().message());
    sc.mode = *mode;
  }
  if (YAML::Node n = root["seed"]; n.IsDefined()) {
    auto v = yaml::Uint(n, "seed", UINT64_MAX);
    if (!v.ok()) return v.status();
    sc.seed = *v;
  }
  if (YAML::Node n = root["segment_mode"]; n.IsDefined()) {
    auto v = yaml::Scalar(n, "segment_mode");
    if (!v.ok()) return v.status();
    auto mode = ParseSegmentMode(*v);
    if (!mode.ok()) {
      return yaml::Error(n, "segment_mode", mode.status().message());
    }
    sc.segment_mode = *mode;
  }
  if (YAML::Node n = root["auto_policies"]; n.IsDefined()) {
    auto v = yaml::Bool(n, "auto_policies");
    if (!v.ok()) return v.status();
    sc.auto_policies = *v;
  }
  if (YAML::Node n = root["configmap_layout"]; n.IsDefined()) {
    auto v = yaml::Scalar(n, "configmap_layout");
    if (!v.ok()) return v.status();
    auto layout = ParseLayout(*v);
    if (!layout.ok()) {
      return yaml::Error(n, "configmap_layout", layout.status().message());
    }
    sc.layout = *layout;
  }
  if (YAML::Node n = root["poll_interval"]; n.IsDefined()) {
    auto v = yaml::Uint(n, "poll_interval", 1u << 20);
    if (!v.ok()) return v.status();
    if (*v == 0) return yaml::Error(n, "poll_interval", "must be positive");
    sc.poll_interval = *v;
  }
  if (YAML::Node n = root["max_steps"]; n.IsDefined()) {
    auto v = yaml::Uint(n, "max_steps", UINT32_MAX);
    if (!v.ok()) return v.status();
    sc.max_steps = *v;
  }

  std::set<std::string> routers;
  for (const YAML::Node& r : AsList(root["routers"])) {
    RouterSpec spec;
    auto id = yaml::Scalar(r["id"], "routers[].id");
    if (!id.ok()) return id.status();
    spec.id = *id;
    if (YAML::Node sid = r["sid"]; sid.IsDefined()) {
      auto v = yaml::V6(sid, "routers[].sid");
      if (!v.ok()) return v.status();
      spec.sid = *v;
    }
    if (!routers.insert(spec.id).second) {
      return yaml::Error(r, "routers",
                         absl::StrCat("duplicate router '", spec.id, "'"));
    }
    sc.routers.push_back(std::move(spec));
  }

  for (const YAML::Node& l : AsList(root["links"])) {
    Link link;
    auto name = yaml::Scalar(l["name"], "links[].name");
    if (!name.ok()) return name.status();
    auto a = yaml::Scalar(l["a"], "links[].a");
    if (!a.ok()) return a.status();
    auto b = yaml::Scalar(l["b"], "links[].b");
    if (!b.ok()) return b.status();
    for (const std::string* end : {&*a, &*b}) {
      if (!routers.contains(*end)) {
        return yaml::Error(l, absl::StrCat("link ", *name),
                           absl::StrCat("unknown router '", *end, "'"));
      }
    }
    link.name = *name;
    link.a = *a;
    link.b = *b;
    if (YAML::Node c = l["cost"]; c.IsDefined()) {
      auto cost = yaml::Uint(c, "links[].cost", UINT32_MAX);
      if (!cost.ok()) return cost.status();
      if (*cost == 0) return yaml::Error(c, "links[].cost", "must be positive");
      link.cost = *cost;
    }
    sc.links.push_back(std::move(link));
  }

  if (YAML::Node p = root["ippools"]; p.IsDefined()) {
    auto text = InlineOrFile(p, "ippools", base_dir);
    if (!text.ok()) return text.status();
    auto pools = ParseIpPools(*text);
    if (!pools.ok()) return yaml::Error(p, "ippools", pools.status().message());
    sc.pools = *std::move(pools);
  }
  auto has_pool = [&](const std::string& name) {
    for (const IpPool& pool : sc.pools) {
      if (pool.name == name) return true;
    }
    return false;
  };
  if (YAML::Node b = root["bsid_pool"]; b.IsDefined()) {
    auto v = yaml::Scalar(b, "bsid_pool");
    if (!v.ok()) return v.status();
    if (!has_pool(*v)) {
      return yaml::Error(b, "bsid_pool",
                         absl::StrCat("unknown ippool '", *v, "'"));
    }
    sc.bsid_pool = *v;
  }

  std::set<std::string> nodes;
  for (const YAML::Node& n : AsList(root["nodes"])) {
    NodeSpec spec;
    auto name = yaml::Scalar(n["name"], "nodes[].name");
    if (!name.ok()) return name.status();
    spec.name = *name;
    std::string path = absl::StrCat("node ", spec.name);
    if (routers.contains(spec.name) || !nodes.insert(spec.name).second) {
      return yaml::Error(n, path, "duplicate vertex name");
    }
    auto infra = yaml::V6(n["infra"], path + ".infra");
    if (!infra.ok()) return infra.status();
    spec.infra = *infra;
    auto router = yaml::Scalar(n["router"], path + ".router");
    if (!router.ok()) return router.status();
    if (!routers.contains(*router)) {
      return yaml::Error(n["router"], path + ".router",
                         absl::StrCat("unknown router '", *router, "'"));
    }
    spec.router = *router;
    spec.link = absl::StrCat(spec.router, "-", spec.name);
    if (YAML::Node l = n["link"]; l.IsDefined()) {
      auto v = yaml::Scalar(l, path + ".link");
      if (!v.ok()) return v.status();
      spec.link = *v;
    }
    if (YAML::Node c = n["link_cost"]; c.IsDefined()) {
      auto v = yaml::Uint(c, path + ".link_cost", UINT32_MAX);
      if (!v.ok()) return v.status();
      if (*v == 0)
        return yaml::Error(c, path + ".link_cost", "must be positive");
      spec.link_cost = *v;
    }
    for (const YAML::Node& p : AsList(n["pod_prefixes"])) {
      auto prefix = yaml::PrefixField(p, path + ".pod_prefixes[]");
      if (!prefix.ok()) return prefix.status();
      spec.pod_prefixes.push_back(*prefix);
    }
    if (YAML::Node sids = n["localsids"]; sids.IsDefined()) {
      if (YAML::Node d = sids["DT4"]; d.IsDefined()) {
        auto v = yaml::V6(d, path + ".localsids.DT4");
        if (!v.ok()) return v.status();
        spec.dt4 = *v;
      }
      if (YAML::Node d = sids["DT6"]; d.IsDefined()) {
        auto v = yaml::V6(d, path + ".localsids.DT6");
        if (!v.ok()) return v.status();
        spec.dt6 = *v;
      }
    }
    if (YAML::Node p = n["localsid_pool"]; p.IsDefined()) {
      auto v = yaml::Scalar(p, path + ".localsid_pool");
      if (!v.ok()) return v.status();
      if (!has_pool(*v)) {
        return yaml::Error(p, path + ".localsid_pool",
                           absl::StrCat("unknown ippool '", *v, "'"));
      }
      spec.localsid_pool = *v;
    }
    sc.nodes.push_back(std::move(spec));
  }

  std::set<std::string> pods;
  for (const YAML::Node& p : AsList(root["pods"])) {
    PodSpec spec;
    auto name = yaml::Scalar(p["name"], "pods[].name");
    if (!name.ok()) return name.status();
    spec.name = *name;
    std::string path = absl::StrCat("pod ", spec.name);
    if (!pods.insert(spec.name).second) {
      return yaml::Error(p, path, "duplicate pod name");
    }
    auto node = yaml::Scalar(p["node"], path + ".node");
    if (!node.ok()) return node.status();
    if (!nodes.contains(*node)) {
      return yaml::Error(p["node"], path + ".node",
                         absl::StrCat("unknown node '", *node, "'"));
    }
    spec.node = *node;
    for (const YAML::Node& f : AsList(p["families"])) {
      auto family = ParseFamily(f, path + ".families[]");
      if (!family.ok()) return family.status();
      spec.families.push_back(*family);
    }
    if (spec.families.empty()) {
      spec.families = {Family::kV4, Family::kV6};
    }
    sc.pods.push_back(std::move(spec));
  }

  if (YAML::Node inj = root["injector"]; inj.IsDefined()) {
    InjectorSpec spec;
    auto name = yaml::Scalar(inj["name"], "injector.name");
    if (!name.ok()) return name.status();
    spec.name = *name;
    for (const YAML::Node& peer : AsList(inj["peers"])) {
      auto v = yaml::Scalar(peer, "injector.peers[]");
      if (!v.ok()) return v.status();
      if (!nodes.contains(*v)) {
        return yaml::Error(peer, "injector.peers[]",
                           absl::StrCat("unknown node '", *v, "'"));
      }
      spec.peers.push_back(*v);
    }
    sc.injector = std::move(spec);
  }

  for (const YAML::Node& p : AsList(root["policies"])) {
    auto text = InlineOrFile(p, "policies[]", base_dir);
    if (!text.ok()) return text.status();
    auto update = ParsePolicyFile(*text);
    if (!update.ok()) {
      return yaml::Error(p, "policies[]", update.status().message());
    }
    sc.policies.push_back(*std::move(update));
  }

  for (const YAML::Node& c : AsList(root["configmap"])) {
    auto text = InlineOrFile(c, "configmap", base_dir);
    if (!text.ok()) return text.status();
    auto docs = ParseConfigMapStream(*text);
    if (!docs.ok()) return yaml::Error(c, "configmap", docs.status().message());
    for (ConfigMapDoc& doc : *docs) {
      if (!nodes.contains(doc.node)) {
        return yaml::Error(
            c, "configmap",
            absl::StrCat("document for unknown node '", doc.node, "'"));
      }
      sc.configmaps.push_back(std::move(doc));
    }
  }
  return ValidateScenario(sc);
}

}  // namespace

const NodeSpec* Scenario::FindNode(absl::string_view name) const {
  for (const NodeSpec& n : nodes) {
    if (n.name == name) return &n;
  }
  return nullptr;
}

const PodSpec* Scenario::FindPod(absl::string_view name) const {
  for (const PodSpec& p : pods) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

absl::Status ValidateScenario(const Scenario& sc) {
  std::set<std::string> vertices;
  std::set<std::string> pool_names;
  for (const IpPool& p : sc.pools) pool_names.insert(p.name);
  for (const RouterSpec& r : sc.routers) {
    if (!vertices.insert(r.id).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate router '", r.id, "'"));
    }
  }
  std::set<V6Addr> infras;
  for (const NodeSpec& n : sc.nodes) {
    if (!vertices.insert(n.name).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate vertex '", n.name, "'"));
    }
    if (!infras.insert(n.infra).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("node ", n.name, ": infra address ", n.infra.ToString(),
                       " already used"));
    }
    bool router_known = false;
    for (const RouterSpec& r : sc.routers) router_known |= r.id == n.router;
    if (!router_known) {
      return absl::InvalidArgumentError(
          absl::StrCat("node ", n.name, ": unknown router '", n.router, "'"));
    }
    bool needs_pool = false;
    for (const Prefix& p : n.pod_prefixes) {
      needs_pool |= p.family() == Family::kV4 ? !n.dt4 : !n.dt6;
    }
    if (needs_pool && sc.mode == AgentMode::kBgp &&
        !pool_names.contains(n.localsid_pool)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "node ", n.name, ": needs static localsids or a localsid_pool"));
    }
  }
  if (sc.mode == AgentMode::kBgp && sc.auto_policies &&
      !pool_names.contains(sc.bsid_pool)) {
    return absl::InvalidArgumentError(
        "auto_policies needs bsid_pool naming an ippool");
  }
  std::set<std::string> pods;
  for (const PodSpec& p : sc.pods) {
    if (!pods.insert(p.name).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate pod '", p.name, "'"));
    }
    const NodeSpec* node = sc.FindNode(p.node);
    if (node == nullptr) {
      return absl::InvalidArgumentError(
          absl::StrCat("pod ", p.name, ": unknown node '", p.node, "'"));
    }
    for (Family f : p.families) {
      bool found = false;
      for (const Prefix& prefix : node->pod_prefixes) {
        found |= prefix.family() == f;
      }
      if (!found) {
        return absl::InvalidArgumentError(
            absl::StrCat("pod ", p.name, ": node ", p.node, " has no ",
                         FamilyName(f), " pod prefix"));
      }
    }
  }
  if (sc.injector) {
    for (const std::string& peer : sc.injector->peers) {
      if (sc.FindNode(peer) == nullptr) {
        return absl::InvalidArgumentError(
            absl::StrCat("injector peer '", peer, "' is not a node"));
      }
    }
  }
  if (!sc.policies.empty() && !sc.injector) {
    return absl::InvalidArgumentError("policies need an injector");
  }
  return absl::OkStatus();
}

absl::StatusOr<Scenario> ParseScenario(absl::string_view text,
                                       const std::string& base_dir,
                                       const std::string& source) {
  auto root = yaml::Load(text, source);
  if (!root.ok()) return root.status();
  Scenario sc;
  if (auto s = ParseBody(*root, base_dir, sc); !s.ok()) {
    return absl::Status(s.code(), absl::StrCat(source, ": ", s.message()));
  }
  return sc;
}

absl::StatusOr<Scenario> LoadScenarioFile(const std::string& path) {
  auto text = ReadTextFile(path);
  if (!text.ok()) return text.status();
  std::string dir = std::filesystem::path(path).parent_path().string();
  return ParseScenario(*text, dir.empty() ? "." : dir, path);
}

absl::StatusOr<std::string> ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot read ", path));
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace srv6k8s
