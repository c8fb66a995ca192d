// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

// Status-returning accessors over yaml-cpp nodes. Errors carry the field
// path and the source line.

#ifndef SRV6K8S_SRC_YAML_UTIL_H_
#define SRV6K8S_SRC_YAML_UTIL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "srv6k8s/net_types.h"
#include "yaml-cpp/yaml.h"

namespace srv6k8s::yaml {

absl::StatusOr<YAML::Node> Load(absl::string_view text, absl::string_view what);
absl::StatusOr<std::vector<YAML::Node>> LoadAll(absl::string_view text,
                                                absl::string_view what);

// "<path> (line N)" when the node carries a source mark.
std::string Where(const YAML::Node& node, absl::string_view path);

absl::Status Error(const YAML::Node& node, absl::string_view path,
                   absl::string_view message);

absl::StatusOr<std::string> Scalar(const YAML::Node& node,
                                   absl::string_view path);
absl::StatusOr<uint64_t> Uint(const YAML::Node& node, absl::string_view path,
                              uint64_t max);
absl::StatusOr<bool> Bool(const YAML::Node& node, absl::string_view path);
absl::StatusOr<V6Addr> V6(const YAML::Node& node, absl::string_view path);
absl::StatusOr<Prefix> PrefixField(const YAML::Node& node,
                                   absl::string_view path);

// Required child of a map.
absl::StatusOr<YAML::Node> Child(const YAML::Node& map, absl::string_view key,
                                 absl::string_view path);

}  // namespace srv6k8s::yaml

#endif  // SRV6K8S_SRC_YAML_UTIL_H_
