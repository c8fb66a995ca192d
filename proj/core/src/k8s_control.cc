// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

#include "srv6k8s/k8s_control.h"

#include <algorithm>

#include "absl/strings/ascii.h"
#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "yaml_util.h"

namespace srv6k8s {
namespace {

constexpr char kNamespace[] = "calico-vpp-dataplane";
constexpr char kSingleMapKey[] = "srv6-config";
constexpr char kHostnameLabel[] = "kubernetes.io/hostname";

std::string Quote(const V6Addr& a) { return "\"" + a.ToString() + "\""; }

absl::StatusOr<Family> ParseTraffic(const YAML::Node& node,
                                    absl::string_view path) {
  auto text = yaml::Scalar(node, path);
  if (!text.ok()) return text.status();
  std::string lower = absl::AsciiStrToLower(*text);
  if (lower == "ipv4") return Family::kV4;
  if (lower == "ipv6") return Family::kV6;
  return yaml::Error(node, path,
                     absl::StrCat("traffic '", *text, "' is not IPv4 or IPv6"));
}

absl::StatusOr<ConfigMapDoc> DocFromNode(const YAML::Node& root) {
  if (!root.IsMap()) return yaml::Error(root, "document", "expected a mapping");
  ConfigMapDoc doc;
  auto node = yaml::Scalar(root["node"], "node");
  if (!node.ok()) return node.status();
  doc.node = *node;

  if (YAML::Node sids = root["localsids"]; sids.IsDefined() && !sids.IsNull()) {
    if (!sids.IsMap()) {
      return yaml::Error(sids, "localsids", "expected a mapping");
    }
    for (const auto& kv : sids) {
      std::string key = kv.first.as<std::string>();
      std::string path = "localsids." + key;
      auto sid = yaml::V6(kv.second, path);
      if (!sid.ok()) return sid.status();
      if (key == "DT4") {
        doc.dt4 = *sid;
      } else if (key == "DT6") {
        doc.dt6 = *sid;
      } else {
        return yaml::Error(kv.first, path, "expected DT4 or DT6");
      }
    }
  }

  YAML::Node policies = root["policies"];
  if (!policies.IsDefined() || policies.IsNull()) return doc;
  if (!policies.IsSequence()) {
    return yaml::Error(policies, "policies", "expected a list");
  }
  for (size_t i = 0; i < policies.size(); ++i) {
    std::string path = absl::StrCat("policies[", i, "]");
    YAML::Node p = policies[i];
    if (!p.IsMap()) return yaml::Error(p, path, "expected a mapping");
    CmPolicy policy;
    YAML::Node egress = p["egress_node"];
    YAML::Node alias = p["node"];
    if (egress.IsDefined() && alias.IsDefined()) {
      auto a = yaml::V6(egress, path + ".egress_node");
      auto b = yaml::V6(alias, path + ".node");
      if (!a.ok()) return a.status();
      if (!b.ok()) return b.status();
      if (*a != *b) {
        return yaml::Error(p, path, "node and egress_node disagree");
      }
      policy.egress_node = *a;
    } else if (egress.IsDefined() || alias.IsDefined()) {
      bool long_form = egress.IsDefined();
      auto a = yaml::V6(long_form ? egress : alias,
                        path + (long_form ? ".egress_node" : ".node"));
      if (!a.ok()) return a.status();
      policy.egress_node = *a;
    } else {
      return yaml::Error(p, path, "missing field 'node'");
    }
    auto bsid = yaml::V6(p["bsid"], path + ".bsid");
    if (!bsid.ok()) return bsid.status();
    policy.bsid = *bsid;
    YAML::Node list = p["segment_list"];
    std::string list_path = path + ".segment_list";
    if (!list.IsDefined() || list.IsNull()) {
      return yaml::Error(p, list_path, "missing value");
    }
    if (!list.IsSequence())
      return yaml::Error(list, list_path, "expected a list");
    for (size_t j = 0; j < list.size(); ++j) {
      auto sid = yaml::V6(list[j], absl::StrCat(list_path, "[", j, "]"));
      if (!sid.ok()) return sid.status();
      policy.segment_list.push_back(*sid);
    }
    auto traffic = ParseTraffic(p["traffic"], path + ".traffic");
    if (!traffic.ok()) return traffic.status();
    policy.traffic = *traffic;
    doc.policies.push_back(std::move(policy));
  }
  if (auto s = ValidateConfigMapDoc(doc); !s.ok()) return s;
  return doc;
}

std::string Indent(absl::string_view text, absl::string_view pad) {
  std::string out;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    if (line.empty()) continue;
    absl::StrAppend(&out, pad, line, "\n");
  }
  return out;
}

// Returns nullopt for an unsupported selector, an empty optional inside
// for "any node".
std::optional<std::optional<std::string>> ParseSelector(absl::string_view raw) {
  absl::string_view s = absl::StripAsciiWhitespace(raw);
  if (s.empty() || s == "all()" || s == "!all()") {
    return std::optional<std::string>();
  }
  if (!absl::ConsumePrefix(&s, kHostnameLabel)) return std::nullopt;
  s = absl::StripLeadingAsciiWhitespace(s);
  if (!absl::ConsumePrefix(&s, "==")) return std::nullopt;
  s = absl::StripAsciiWhitespace(s);
  if (s.size() < 2 || (s.front() != '\'' && s.front() != '"') ||
      s.back() != s.front()) {
    return std::nullopt;
  }
  return std::optional<std::string>(std::string(s.substr(1, s.size() - 2)));
}

// base + offset as a 128-bit (or 32-bit) integer.
IpAddress AddOffset(const IpAddress& base, unsigned __int128 offset) {
  if (const auto* v4 = std::get_if<V4Addr>(&base)) {
    return V4Addr(v4->bits() + static_cast<uint32_t>(offset));
  }
  V6Addr::Bytes b = std::get<V6Addr>(base).bytes();
  unsigned __int128 carry = offset;
  for (int i = 15; i >= 0 && carry != 0; --i) {
    unsigned __int128 sum = b[i] + (carry & 0xff);
    b[i] = static_cast<uint8_t>(sum);
    carry = (carry >> 8) + (sum >> 8);
  }
  return V6Addr(b);
}

absl::StatusOr<std::map<std::string, std::string>> ParseSingleMap(
    absl::string_view text) {
  auto root = yaml::Load(text, kSingleMapKey);
  if (!root.ok()) return root.status();
  std::map<std::string, std::string> out;
  if (root->IsNull()) return out;
  if (!root->IsMap()) {
    return yaml::Error(*root, kSingleMapKey, "expected a mapping");
  }
  for (const auto& kv : *root) {
    auto value = yaml::Scalar(kv.second, kv.first.as<std::string>());
    if (!value.ok()) return value.status();
    out[kv.first.as<std::string>()] = *value;
  }
  return out;
}

std::string SerializeSingleMap(const std::map<std::string, std::string>& m) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  for (const auto& [node, doc] : m) {
    e << YAML::Key << node << YAML::Value << YAML::Literal << doc;
  }
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace

uint64_t KvStore::Write(const std::string& key, std::string value) {
  Entry& e = entries_[key];
  e.value = std::move(value);
  e.version = ++last_version_;
  return e.version;
}

std::optional<KvStore::Entry> KvStore::Read(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KvStore::DumpSnapshot() const {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "last_version" << YAML::Value << last_version_;
  e << YAML::Key << "entries" << YAML::Value << YAML::BeginMap;
  for (const auto& [key, entry] : entries_) {
    e << YAML::Key << key << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "version" << YAML::Value << entry.version;
    e << YAML::Key << "value" << YAML::Value << YAML::DoubleQuoted
      << entry.value;
    e << YAML::EndMap;
  }
  e << YAML::EndMap << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

absl::StatusOr<KvStore> KvStore::LoadSnapshot(absl::string_view text) {
  auto root = yaml::Load(text, "snapshot");
  if (!root.ok()) return root.status();
  KvStore store;
  auto last = yaml::Uint((*root)["last_version"], "last_version", UINT64_MAX);
  if (!last.ok()) return last.status();
  store.last_version_ = *last;
  YAML::Node entries = (*root)["entries"];
  if (entries.IsDefined() && !entries.IsNull()) {
    if (!entries.IsMap()) {
      return yaml::Error(entries, "entries", "expected a mapping");
    }
    for (const auto& kv : entries) {
      std::string key = kv.first.as<std::string>();
      std::string path = "entries." + key;
      auto version = yaml::Uint(kv.second["version"], path + ".version", *last);
      if (!version.ok()) return version.status();
      YAML::Node value = kv.second["value"];
      if (!value.IsDefined() || !value.IsScalar()) {
        return yaml::Error(kv.second, path + ".value", "missing value");
      }
      store.entries_[key] = Entry{value.Scalar(), *version};
    }
  }
  return store;
}

absl::Status ValidateConfigMapDoc(const ConfigMapDoc& doc) {
  if (doc.node.empty()) return absl::InvalidArgumentError("node: empty");
  std::map<PolicyKey, size_t> keys;
  std::map<V6Addr, size_t> bsids;
  for (size_t i = 0; i < doc.policies.size(); ++i) {
    const CmPolicy& p = doc.policies[i];
    std::string path = absl::StrCat("policies[", i, "]");
    if (p.segment_list.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ".segment_list: empty"));
    }
    if (p.segment_list.size() > kMaxSrhSegments) {
      return absl::InvalidArgumentError(absl::StrCat(
          path, ".segment_list: more than ", kMaxSrhSegments, " segments"));
    }
    auto [k, fresh] = keys.emplace(KeyOf(p), i);
    if (!fresh) {
      return absl::InvalidArgumentError(absl::StrCat(
          path, ": second ", p.traffic == Family::kV4 ? "IPv4" : "IPv6",
          " policy for ", p.egress_node.ToString(), " (first is policies[",
          k->second, "])"));
    }
    auto [b, unique] = bsids.emplace(p.bsid, i);
    if (!unique) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ".bsid: ", p.bsid.ToString(),
                       " already used by policies[", b->second, "]"));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<ConfigMapDoc> ParseConfigMapDoc(absl::string_view text) {
  auto root = yaml::Load(text, "configmap document");
  if (!root.ok()) return root.status();
  return DocFromNode(*root);
}

absl::StatusOr<std::vector<ConfigMapDoc>> ParseConfigMapStream(
    absl::string_view text) {
  auto docs = yaml::LoadAll(text, "configmap");
  if (!docs.ok()) return docs.status();
  std::vector<ConfigMapDoc> out;
  for (size_t i = 0; i < docs->size(); ++i) {
    const YAML::Node& d = (*docs)[i];
    if (d.IsNull()) continue;
    if (d.IsMap() && d["kind"].IsDefined()) {
      auto kind = yaml::Scalar(d["kind"], "kind");
      if (!kind.ok()) return kind.status();
      if (*kind != "ConfigMap") {
        return yaml::Error(d["kind"], absl::StrCat("document ", i, ".kind"),
                           absl::StrCat("unexpected kind '", *kind, "'"));
      }
      YAML::Node data = d["data"];
      if (!data.IsMap() || !data["srv6"].IsDefined()) {
        return yaml::Error(d, absl::StrCat("document ", i),
                           "missing data.srv6");
      }
      auto inner = yaml::Scalar(data["srv6"], "data.srv6");
      if (!inner.ok()) return inner.status();
      auto doc = ParseConfigMapDoc(*inner);
      if (!doc.ok()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "document ", i, " data.srv6: ", doc.status().message()));
      }
      out.push_back(*std::move(doc));
      continue;
    }
    auto doc = DocFromNode(d);
    if (!doc.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("document ", i, ": ", doc.status().message()));
    }
    out.push_back(*std::move(doc));
  }
  return out;
}

std::string SerializeConfigMapDoc(const ConfigMapDoc& doc) {
  std::string out = "---\n";
  if (doc.dt4 || doc.dt6) {
    out += "localsids:\n";
    if (doc.dt4) absl::StrAppend(&out, "  DT4: ", Quote(*doc.dt4), "\n");
    if (doc.dt6) absl::StrAppend(&out, "  DT6: ", Quote(*doc.dt6), "\n");
  }
  absl::StrAppend(&out, "node: ", doc.node, "\n");
  if (doc.policies.empty()) {
    out += "policies: []\n";
    return out;
  }
  out += "policies:\n";
  for (const CmPolicy& p : doc.policies) {
    absl::StrAppend(&out, "  -\n    bsid: ", Quote(p.bsid),
                    "\n    node: ", Quote(p.egress_node),
                    "\n    segment_list:\n");
    for (const V6Addr& sid : p.segment_list) {
      absl::StrAppend(&out, "      - ", Quote(sid), "\n");
    }
    absl::StrAppend(&out,
                    "    traffic: ", p.traffic == Family::kV4 ? "IPv4" : "IPv6",
                    "\n");
  }
  return out;
}

std::string RenderConfigMapObject(const ConfigMapDoc& doc) {
  return absl::StrCat("apiVersion: v1\nkind: ConfigMap\nmetadata:\n name: ",
                      ConfigMapKey(ConfigMapLayout::kPerNode, doc.node),
                      "\n namespace: ", kNamespace, "\ndata:\n srv6: |\n",
                      Indent(SerializeConfigMapDoc(doc), "   "));
}

absl::string_view LayoutName(ConfigMapLayout layout) {
  return layout == ConfigMapLayout::kSingleMap ? "single-map" : "per-node";
}

absl::StatusOr<ConfigMapLayout> ParseLayout(absl::string_view text) {
  if (text == "single-map") return ConfigMapLayout::kSingleMap;
  if (text == "per-node") return ConfigMapLayout::kPerNode;
  return absl::InvalidArgumentError(absl::StrCat(
      "configmap layout '", text, "' is not single-map or per-node"));
}

std::string ConfigMapKey(ConfigMapLayout layout, absl::string_view node) {
  if (layout == ConfigMapLayout::kSingleMap) return kSingleMapKey;
  return absl::StrCat(kSingleMapKey, "-", node);
}

std::optional<PollResult> Poll(const KvStore& store, WatchHandle& watch) {
  for (const std::string& key : watch.keys) {
    auto entry = store.Read(key);
    if (!entry) continue;
    uint64_t& seen = watch.last_seen[key];
    if (entry->version > seen) {
      seen = entry->version;
      return PollResult{key, entry->value, entry->version};
    }
  }
  return std::nullopt;
}

absl::StatusOr<uint64_t> ConfigMapStore::Write(const ConfigMapDoc& doc) {
  if (auto s = ValidateConfigMapDoc(doc); !s.ok()) return s;
  std::string key = ConfigMapKey(layout_, doc.node);
  if (layout_ == ConfigMapLayout::kPerNode) {
    return store_->Write(key, SerializeConfigMapDoc(doc));
  }
  std::map<std::string, std::string> all;
  if (auto existing = store_->Read(key)) {
    auto parsed = ParseSingleMap(existing->value);
    if (!parsed.ok()) return parsed.status();
    all = *std::move(parsed);
  }
  all[doc.node] = SerializeConfigMapDoc(doc);
  return store_->Write(key, SerializeSingleMap(all));
}

absl::StatusOr<std::pair<ConfigMapDoc, uint64_t>> ConfigMapStore::Read(
    absl::string_view node) const {
  std::string key = ConfigMapKey(layout_, node);
  auto entry = store_->Read(key);
  if (!entry) {
    return absl::NotFoundError(absl::StrCat("no configmap '", key, "'"));
  }
  std::string text = entry->value;
  if (layout_ == ConfigMapLayout::kSingleMap) {
    auto all = ParseSingleMap(entry->value);
    if (!all.ok()) return all.status();
    auto it = all->find(std::string(node));
    if (it == all->end()) {
      return absl::NotFoundError(
          absl::StrCat("configmap '", key, "' has no entry for ", node));
    }
    text = it->second;
  }
  auto doc = ParseConfigMapDoc(text);
  if (!doc.ok()) return doc.status();
  return std::make_pair(*std::move(doc), entry->version);
}

WatchHandle ConfigMapStore::WatchFor(absl::string_view node) const {
  WatchHandle watch;
  watch.keys.push_back(ConfigMapKey(layout_, node));
  return watch;
}

absl::StatusOr<std::optional<std::pair<ConfigMapDoc, uint64_t>>>
ConfigMapStore::PollFor(absl::string_view node, WatchHandle& watch) {
  ++meter_.polls;
  auto change = Poll(*store_, watch);
  if (!change) return std::nullopt;
  ++meter_.scans;
  std::string text = change->value;
  if (layout_ == ConfigMapLayout::kSingleMap) {
    auto all = ParseSingleMap(change->value);
    if (!all.ok()) return all.status();
    auto it = all->find(std::string(node));
    if (it == all->end()) return std::nullopt;
    text = it->second;
  }
  auto doc = ParseConfigMapDoc(text);
  if (!doc.ok()) return doc.status();
  return std::make_optional(std::make_pair(*std::move(doc), change->version));
}

PolicyDiff DiffPolicies(std::span<const CmPolicy> before,
                        std::span<const CmPolicy> after) {
  std::map<PolicyKey, const CmPolicy*> old_by_key, new_by_key;
  for (const CmPolicy& p : before) old_by_key[KeyOf(p)] = &p;
  for (const CmPolicy& p : after) new_by_key[KeyOf(p)] = &p;
  PolicyDiff diff;
  for (const auto& [key, p] : new_by_key) {
    auto it = old_by_key.find(key);
    if (it == old_by_key.end()) {
      diff.added.push_back(*p);
    } else if (!(*it->second == *p)) {
      diff.replaced.push_back(*p);
    }
  }
  for (const auto& [key, p] : old_by_key) {
    if (!new_by_key.contains(key)) diff.removed.push_back(*p);
  }
  return diff;
}

bool IpPool::Selects(absl::string_view node) const {
  auto sel = ParseSelector(node_selector);
  if (!sel) return false;
  return !sel->has_value() || **sel == node;
}

absl::StatusOr<IpPool> MakePool(std::string name, const Prefix& cidr,
                                std::optional<int> block_size,
                                std::string node_selector) {
  int bits = FamilyBits(cidr.family());
  int block = block_size.value_or(cidr.family() == Family::kV4 ? 26 : 122);
  std::string where = absl::StrCat("ippool '", name, "'");
  if (name.empty()) return absl::InvalidArgumentError("ippool: empty name");
  if (block < cidr.length() || block > bits) {
    return absl::InvalidArgumentError(absl::StrCat(
        where, ": blockSize ", block, " outside ", cidr.length(), "..", bits));
  }
  if (block - cidr.length() > 63 || bits - block > 63) {
    return absl::InvalidArgumentError(
        absl::StrCat(where, ": blockSize ", block,
                     " gives more than 2^63 blocks or "
                     "addresses per block"));
  }
  if (!ParseSelector(node_selector)) {
    return absl::InvalidArgumentError(absl::StrCat(
        where, ": unsupported nodeSelector '", node_selector, "'"));
  }
  return IpPool{std::move(name), cidr, block, std::move(node_selector)};
}

absl::StatusOr<std::vector<IpPool>> ParseIpPools(absl::string_view text) {
  auto docs = yaml::LoadAll(text, "ippools");
  if (!docs.ok()) return docs.status();
  std::vector<YAML::Node> objects;
  for (const YAML::Node& d : *docs) {
    if (d.IsNull()) continue;
    if (d.IsSequence()) {
      for (const YAML::Node& o : d) objects.push_back(o);
    } else {
      objects.push_back(d);
    }
  }
  std::vector<IpPool> out;
  for (size_t i = 0; i < objects.size(); ++i) {
    const YAML::Node& o = objects[i];
    std::string path = absl::StrCat("ippool[", i, "]");
    if (!o.IsMap()) return yaml::Error(o, path, "expected a mapping");
    if (o["kind"].IsDefined()) {
      auto kind = yaml::Scalar(o["kind"], path + ".kind");
      if (!kind.ok()) return kind.status();
      if (*kind != "IPPool") {
        return yaml::Error(o["kind"], path + ".kind",
                           absl::StrCat("unexpected kind '", *kind, "'"));
      }
    }
    auto meta = yaml::Child(o, "metadata", path);
    if (!meta.ok()) return meta.status();
    auto name = yaml::Scalar((*meta)["name"], path + ".metadata.name");
    if (!name.ok()) return name.status();
    auto spec = yaml::Child(o, "spec", path);
    if (!spec.ok()) return spec.status();
    auto cidr = yaml::PrefixField((*spec)["cidr"], path + ".spec.cidr");
    if (!cidr.ok()) return cidr.status();
    std::optional<int> block;
    if (YAML::Node b = (*spec)["blockSize"]; b.IsDefined()) {
      auto v = yaml::Uint(b, path + ".spec.blockSize", 128);
      if (!v.ok()) return v.status();
      block = static_cast<int>(*v);
    }
    std::string selector;
    if (YAML::Node s = (*spec)["nodeSelector"]; s.IsDefined() && !s.IsNull()) {
      auto v = yaml::Scalar(s, path + ".spec.nodeSelector");
      if (!v.ok()) return v.status();
      selector = *v;
    }
    auto pool = MakePool(*name, *cidr, block, selector);
    if (!pool.ok()) {
      return yaml::Error(o, path, pool.status().message());
    }
    out.push_back(*std::move(pool));
  }
  return out;
}

absl::Status Ipam::AddPool(IpPool pool) {
  if (state_.contains(pool.name)) {
    return absl::AlreadyExistsError(
        absl::StrCat("duplicate ippool '", pool.name, "'"));
  }
  int bits = FamilyBits(pool.cidr.family());
  PoolState st;
  st.blocks = uint64_t{1} << (pool.block_size - pool.cidr.length());
  st.block_addrs = uint64_t{1} << (bits - pool.block_size);
  state_.emplace(pool.name, std::move(st));
  pools_.push_back(std::move(pool));
  return absl::OkStatus();
}

absl::StatusOr<IpAddress> Ipam::Allocate(absl::string_view pool_name,
                                         absl::string_view node) {
  const IpPool* pool = FindPool(pool_name);
  if (pool == nullptr) {
    return absl::NotFoundError(absl::StrCat("no ippool '", pool_name, "'"));
  }
  if (!pool->Selects(node)) {
    return absl::PermissionDeniedError(
        absl::StrCat("node '", node, "' is not eligible for ippool '",
                     pool_name, "' (selector ", pool->node_selector, ")"));
  }
  PoolState& st = state_.find(pool_name)->second;
  auto it = st.nodes.find(node);
  if (it == st.nodes.end()) {
    it = st.nodes.emplace(std::string(node), NodeState{}).first;
  }
  NodeState& ns = it->second;
  if (!ns.has_block || ns.next == st.block_addrs) {
    if (st.next_block == st.blocks) {
      return absl::ResourceExhaustedError(
          absl::StrCat("ippool '", pool_name, "' exhausted"));
    }
    ns.block = st.next_block++;
    ns.next = 0;
    ns.has_block = true;
  }
  unsigned __int128 offset =
      static_cast<unsigned __int128>(ns.block) * st.block_addrs + ns.next++;
  IpAddress addr = AddOffset(pool->cidr.base(), offset);
  st.allocated.push_back(addr);
  return addr;
}

const IpPool* Ipam::FindPool(absl::string_view name) const {
  for (const IpPool& p : pools_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::vector<IpAddress> Ipam::Allocated(absl::string_view pool) const {
  auto it = state_.find(pool);
  if (it == state_.end()) return {};
  return it->second.allocated;
}

}  // namespace srv6k8s
