// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

// Kubernetes-side control plane: a versioned key-value store standing in
// for the API server, ConfigMap documents with SR policies, polling
// watches, and IP pools for SID allocation.

#ifndef SRV6K8S_K8S_CONTROL_H_
#define SRV6K8S_K8S_CONTROL_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "srv6k8s/net_types.h"

namespace srv6k8s {

class KvStore {
 public:
  struct Entry {
    std::string value;
    uint64_t version = 0;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  // Every write takes the next store-wide version, so a key's version
  // strictly increases.
  uint64_t Write(const std::string& key, std::string value);
  std::optional<Entry> Read(const std::string& key) const;

  const std::map<std::string, Entry>& entries() const { return entries_; }
  uint64_t last_version() const { return last_version_; }

  // YAML snapshot of every key with its version.
  std::string DumpSnapshot() const;
  static absl::StatusOr<KvStore> LoadSnapshot(absl::string_view text);

  friend bool operator==(const KvStore&, const KvStore&) = default;

 private:
  std::map<std::string, Entry> entries_;
  uint64_t last_version_ = 0;
};

struct CmPolicy {
  V6Addr egress_node;  // infra address of the egress node
  V6Addr bsid;
  std::vector<V6Addr> segment_list;
  Family traffic = Family::kV6;

  friend bool operator==(const CmPolicy&, const CmPolicy&) = default;
};

// Policies are keyed by (egress node, traffic family).
using PolicyKey = std::pair<V6Addr, Family>;

inline PolicyKey KeyOf(const CmPolicy& p) { return {p.egress_node, p.traffic}; }

struct ConfigMapDoc {
  std::string node;
  std::optional<V6Addr> dt4;
  std::optional<V6Addr> dt6;
  std::vector<CmPolicy> policies;

  friend bool operator==(const ConfigMapDoc&, const ConfigMapDoc&) = default;
};

// Non-empty segment lists, at most one policy per (egress, traffic), and
// distinct BSIDs. Errors name the offending path, e.g.
// "policies[1].segment_list".
absl::Status ValidateConfigMapDoc(const ConfigMapDoc& doc);

// One bare document. Policies accept `node` or `egress_node` for the
// egress address and `traffic` IPv4 / IPv6.
absl::StatusOr<ConfigMapDoc> ParseConfigMapDoc(absl::string_view text);
// Multi-document input whose documents are either bare SRv6 documents or
// v1 ConfigMap objects carrying one in data.srv6.
absl::StatusOr<std::vector<ConfigMapDoc>> ParseConfigMapStream(
    absl::string_view text);

// The testbed layout: a leading "---", quoted addresses, policies as
// "-" items with bsid, node, segment_list and traffic.
std::string SerializeConfigMapDoc(const ConfigMapDoc& doc);
// The v1 ConfigMap object named srv6-config-<node> wrapping the document.
std::string RenderConfigMapObject(const ConfigMapDoc& doc);

enum class ConfigMapLayout : uint8_t {
  kSingleMap,  // one key holding every node's document
  kPerNode,    // one key per node
};

absl::string_view LayoutName(ConfigMapLayout layout);
absl::StatusOr<ConfigMapLayout> ParseLayout(absl::string_view text);

// Key a node's document lives under.
std::string ConfigMapKey(ConfigMapLayout layout, absl::string_view node);

struct WatchHandle {
  std::vector<std::string> keys;
  std::map<std::string, uint64_t> last_seen;
};

struct PollResult {
  std::string key;
  std::string value;
  uint64_t version = 0;
};

// Reports the first watched key whose version moved past last_seen and
// records the new version. Keys that never existed are not changes.
std::optional<PollResult> Poll(const KvStore& store, WatchHandle& watch);

struct CostMeter {
  uint64_t polls = 0;
  uint64_t scans = 0;  // documents returned to an agent for examination
};

// ConfigMap access on top of the store for either layout.
class ConfigMapStore {
 public:
  ConfigMapStore(KvStore* store, ConfigMapLayout layout)
      : store_(store), layout_(layout) {}

  ConfigMapLayout layout() const { return layout_; }

  absl::StatusOr<uint64_t> Write(const ConfigMapDoc& doc);
  absl::StatusOr<std::pair<ConfigMapDoc, uint64_t>> Read(
      absl::string_view node) const;

  WatchHandle WatchFor(absl::string_view node) const;
  // One poll for `node`. A changed key yields the node's document, or
  // nullopt when the change did not touch it. Errors come from parsing.
  absl::StatusOr<std::optional<std::pair<ConfigMapDoc, uint64_t>>> PollFor(
      absl::string_view node, WatchHandle& watch);

  const CostMeter& meter() const { return meter_; }

 private:
  KvStore* store_;
  ConfigMapLayout layout_;
  CostMeter meter_;
};

// Per-key differences between the policies of two documents.
struct PolicyDiff {
  std::vector<CmPolicy> added;
  std::vector<CmPolicy> replaced;  // new versions
  std::vector<CmPolicy> removed;

  bool empty() const {
    return added.empty() && replaced.empty() && removed.empty();
  }
  size_t total() const {
    return added.size() + replaced.size() + removed.size();
  }
};

PolicyDiff DiffPolicies(std::span<const CmPolicy> before,
                        std::span<const CmPolicy> after);

// IP pool in the Calico IPPool vocabulary. Addresses are handed out in
// blocks of 2^(bits - block_size); each node owns whole blocks.
struct IpPool {
  std::string name;
  Prefix cidr;
  int block_size = 0;
  std::string node_selector;  // raw selector text

  // "!all()", "all()" and an empty selector place no restriction.
  // "kubernetes.io/hostname == 'X'" restricts allocation to node X.
  bool Selects(absl::string_view node) const;
};

absl::StatusOr<IpPool> MakePool(std::string name, const Prefix& cidr,
                                std::optional<int> block_size,
                                std::string node_selector);

// A YAML list (or multi-document stream) of IPPool objects.
absl::StatusOr<std::vector<IpPool>> ParseIpPools(absl::string_view text);

class Ipam {
 public:
  absl::Status AddPool(IpPool pool);

  // The node's current block yields its next address; when that block is
  // full the next free block of the pool is claimed.
  absl::StatusOr<IpAddress> Allocate(absl::string_view pool,
                                     absl::string_view node);

  const IpPool* FindPool(absl::string_view name) const;
  const std::vector<IpPool>& pools() const { return pools_; }
  // Every address handed out, per pool.
  std::vector<IpAddress> Allocated(absl::string_view pool) const;

 private:
  struct NodeState {
    uint64_t block = 0;
    uint64_t next = 0;
    bool has_block = false;
  };
  struct PoolState {
    uint64_t next_block = 0;
    uint64_t blocks = 0;
    uint64_t block_addrs = 0;
    std::map<std::string, NodeState, std::less<>> nodes;
    std::vector<IpAddress> allocated;
  };

  std::vector<IpPool> pools_;
  std::map<std::string, PoolState, std::less<>> state_;
};

}  // namespace srv6k8s

#endif  // SRV6K8S_K8S_CONTROL_H_
