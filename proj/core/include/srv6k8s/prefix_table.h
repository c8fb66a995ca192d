// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SRV6K8S_PREFIX_TABLE_H_
#define SRV6K8S_PREFIX_TABLE_H_

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <utility>

#include "srv6k8s/net_types.h"

namespace srv6k8s {

// Longest-prefix-match table over both families. Lookups probe only the
// prefix lengths actually present, longest first.
template <typename T>
class PrefixTable {
 public:
  using Map = std::map<Prefix, T>;

  // Returns true when the table changed.
  bool Insert(const Prefix& prefix, T value) {
    auto [it, inserted] = entries_.try_emplace(prefix, value);
    if (inserted) {
      ++lengths(prefix.family())[prefix.length()];
      return true;
    }
    if (it->second == value) return false;
    it->second = std::move(value);
    return true;
  }

  bool Erase(const Prefix& prefix) {
    auto it = entries_.find(prefix);
    if (it == entries_.end()) return false;
    auto& counts = lengths(prefix.family());
    if (--counts[prefix.length()] == 0) counts.erase(prefix.length());
    entries_.erase(it);
    return true;
  }

  void Clear() {
    entries_.clear();
    v4_lengths_.clear();
    v6_lengths_.clear();
  }

  const T* Find(const Prefix& prefix) const {
    auto it = entries_.find(prefix);
    return it == entries_.end() ? nullptr : &it->second;
  }

  // Longest prefix covering `addr`, if any.
  std::optional<std::pair<Prefix, T>> Lookup(const IpAddress& addr) const {
    const auto& counts =
        FamilyOf(addr) == Family::kV4 ? v4_lengths_ : v6_lengths_;
    for (const auto& [length, count] : counts) {
      (void)count;
      auto probe = Prefix::Make(addr, length);
      auto it = entries_.find(*probe);
      if (it != entries_.end()) return *it;
    }
    return std::nullopt;
  }

  const Map& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  friend bool operator==(const PrefixTable& a, const PrefixTable& b) {
    return a.entries_ == b.entries_;
  }

 private:
  using LengthCounts = std::map<int, int, std::greater<int>>;

  LengthCounts& lengths(Family family) {
    return family == Family::kV4 ? v4_lengths_ : v6_lengths_;
  }

  Map entries_;
  LengthCounts v4_lengths_;
  LengthCounts v6_lengths_;
};

}  // namespace srv6k8s

#endif  // SRV6K8S_PREFIX_TABLE_H_
