// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

#include "yaml_util.h"

#include <charconv>
#include <exception>
#include <string>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"

namespace srv6k8s::yaml {

absl::StatusOr<YAML::Node> Load(absl::string_view text,
                                absl::string_view what) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat(what, ": line ", e.mark.line + 1, ": ", e.msg));
  }
}

absl::StatusOr<std::vector<YAML::Node>> LoadAll(absl::string_view text,
                                                absl::string_view what) {
  try {
    return YAML::LoadAll(std::string(text));
  } catch (const YAML::Exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat(what, ": line ", e.mark.line + 1, ": ", e.msg));
  }
}

std::string Where(const YAML::Node& node, absl::string_view path) {
  if (node.IsDefined() && !node.Mark().is_null()) {
    return absl::StrCat(path, " (line ", node.Mark().line + 1, ")");
  }
  return std::string(path);
}

absl::Status Error(const YAML::Node& node, absl::string_view path,
                   absl::string_view message) {
  return absl::InvalidArgumentError(
      absl::StrCat(Where(node, path), ": ", message));
}

absl::StatusOr<std::string> Scalar(const YAML::Node& node,
                                   absl::string_view path) {
  if (!node.IsDefined() || node.IsNull()) {
    return Error(node, path, "missing value");
  }
  if (!node.IsScalar()) return Error(node, path, "expected a scalar");
  return node.Scalar();
}

absl::StatusOr<uint64_t> Uint(const YAML::Node& node, absl::string_view path,
                              uint64_t max) {
  auto text = Scalar(node, path);
  if (!text.ok()) return text.status();
  uint64_t value = 0;
  const char* begin = text->data();
  const char* end = begin + text->size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text->empty() || ec != std::errc() || ptr != end) {
    return Error(node, path, absl::StrCat("'", *text, "' is not an integer"));
  }
  if (value > max) {
    return Error(node, path, absl::StrCat(value, " exceeds ", max));
  }
  return value;
}

absl::StatusOr<bool> Bool(const YAML::Node& node, absl::string_view path) {
  auto text = Scalar(node, path);
  if (!text.ok()) return text.status();
  std::string lower = absl::AsciiStrToLower(*text);
  if (lower == "true") return true;
  if (lower == "false") return false;
  return Error(node, path, absl::StrCat("'", *text, "' is not a boolean"));
}

absl::StatusOr<V6Addr> V6(const YAML::Node& node, absl::string_view path) {
  auto text = Scalar(node, path);
  if (!text.ok()) return text.status();
  auto addr = V6Addr::Parse(*text);
  if (!addr.ok()) return Error(node, path, addr.status().message());
  return *addr;
}

absl::StatusOr<Prefix> PrefixField(const YAML::Node& node,
                                   absl::string_view path) {
  auto text = Scalar(node, path);
  if (!text.ok()) return text.status();
  auto prefix = Prefix::Parse(*text);
  if (!prefix.ok()) return Error(node, path, prefix.status().message());
  return *prefix;
}

absl::StatusOr<YAML::Node> Child(const YAML::Node& map, absl::string_view key,
                                 absl::string_view path) {
  if (!map.IsMap()) return Error(map, path, "expected a mapping");
  YAML::Node child = map[std::string(key)];
  if (!child.IsDefined()) {
    return Error(map, path, absl::StrCat("missing field '", key, "'"));
  }
  return child;
}

}  // namespace srv6k8s::yaml
