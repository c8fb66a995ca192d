// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

// Addresses, prefixes and the packet representations the dataplane
// transforms, with wire codecs for the IPv6 fixed header and the Segment
// Routing Header (routing type 4).

#ifndef SRV6K8S_NET_TYPES_H_
#define SRV6K8S_NET_TYPES_H_

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace srv6k8s {

enum class Family : uint8_t { kV4, kV6 };

absl::string_view FamilyName(Family family);  // "v4" / "v6"

inline constexpr int FamilyBits(Family family) {
  return family == Family::kV4 ? 32 : 128;
}

// IP protocol numbers used by the codecs.
inline constexpr uint8_t kProtoIpv4 = 4;
inline constexpr uint8_t kProtoRouting = 43;
inline constexpr uint8_t kProtoIpv6 = 41;
inline constexpr uint8_t kProtoNoNext = 59;

inline constexpr uint8_t InnerProtocol(Family family) {
  return family == Family::kV4 ? kProtoIpv4 : kProtoIpv6;
}

class V4Addr {
 public:
  constexpr V4Addr() = default;
  explicit constexpr V4Addr(uint32_t bits) : bits_(bits) {}

  static absl::StatusOr<V4Addr> Parse(absl::string_view text);

  constexpr uint32_t bits() const { return bits_; }
  std::array<uint8_t, 4> bytes() const;
  std::string ToString() const;

  friend constexpr auto operator<=>(V4Addr, V4Addr) = default;

 private:
  uint32_t bits_ = 0;
};

class V6Addr {
 public:
  using Bytes = std::array<uint8_t, 16>;

  constexpr V6Addr() = default;
  explicit constexpr V6Addr(const Bytes& bytes) : bytes_(bytes) {}

  static absl::StatusOr<V6Addr> Parse(absl::string_view text);
  // For literals known to be valid; aborts otherwise.
  static V6Addr MustParse(absl::string_view text);

  const Bytes& bytes() const { return bytes_; }
  std::string ToString() const;  // RFC 5952 canonical text

  // Adds `offset` to the address, treating it as a 128-bit big-endian
  // integer. Wraps on overflow.
  V6Addr Plus(uint64_t offset) const;

  friend constexpr auto operator<=>(const V6Addr&, const V6Addr&) = default;

 private:
  Bytes bytes_{};
};

using IpAddress = std::variant<V4Addr, V6Addr>;

Family FamilyOf(const IpAddress& addr);
std::string ToString(const IpAddress& addr);

// Parses either family. Errors name the offending token.
absl::StatusOr<IpAddress> ParseAddr(absl::string_view text);

// Prefix with a canonical base: every bit past `length` is zero.
class Prefix {
 public:
  Prefix() = default;

  // Normalizes `base` by clearing the host bits.
  static absl::StatusOr<Prefix> Make(const IpAddress& base, int length);
  static absl::StatusOr<Prefix> Parse(absl::string_view text);  // "a/len"
  static Prefix HostRoute(const IpAddress& addr);

  Family family() const { return FamilyOf(base_); }
  const IpAddress& base() const { return base_; }
  int length() const { return length_; }

  // Fails when `addr` belongs to the other family.
  absl::StatusOr<bool> Contains(const IpAddress& addr) const;
  // Same-family only, false on mismatch.
  bool Covers(const IpAddress& addr) const;

  std::string ToString() const;

  friend auto operator<=>(const Prefix&, const Prefix&) = default;

 private:
  Prefix(const IpAddress& base, int length) : base_(base), length_(length) {}

  IpAddress base_ = V4Addr();
  int length_ = 0;
};

// Clears every bit of `addr` past `length`.
IpAddress MaskAddress(const IpAddress& addr, int length);

struct InnerPacket {
  Family family = Family::kV4;
  IpAddress src = V4Addr();
  IpAddress dst = V4Addr();
  uint8_t hop_limit = 64;
  std::vector<uint8_t> payload;

  friend bool operator==(const InnerPacket&, const InnerPacket&) = default;
};

absl::Status ValidateInner(const InnerPacket& packet);

// Minimal fixed headers: 20-byte IPv4 without options (checksum left zero),
// or the 40-byte IPv6 header. Protocol / next header is kProtoNoNext.
std::vector<uint8_t> EncodeInner(const InnerPacket& packet);
absl::StatusOr<InnerPacket> DecodeInner(std::span<const uint8_t> bytes);

inline constexpr uint8_t kSrhRoutingType = 4;
inline constexpr size_t kSrhFixedBytes = 8;
inline constexpr size_t kSidBytes = 16;
inline constexpr size_t kIpv6HeaderBytes = 40;
// hdr_ext_len is 8 bits and counts 2 units per SID.
inline constexpr size_t kMaxSrhSegments = 127;

// Segment Routing Header. The segment list is held in stored (reverse path)
// order: segment_list()[last_entry()] is the first SID of the path.
class Srh {
 public:
  static absl::StatusOr<Srh> Make(uint8_t next_header,
                                  std::vector<V6Addr> segment_list,
                                  uint8_t segments_left, uint8_t flags = 0,
                                  uint16_t tag = 0);
  // Builds the header for a policy given in forward path order, with the
  // first path segment active.
  static absl::StatusOr<Srh> ForPath(uint8_t next_header,
                                     std::span<const V6Addr> path);

  uint8_t next_header() const { return next_header_; }
  uint8_t hdr_ext_len() const {
    return static_cast<uint8_t>(2 * segment_list_.size());
  }
  uint8_t routing_type() const { return kSrhRoutingType; }
  uint8_t segments_left() const { return segments_left_; }
  uint8_t last_entry() const {
    return static_cast<uint8_t>(segment_list_.size() - 1);
  }
  uint8_t flags() const { return flags_; }
  uint16_t tag() const { return tag_; }
  const std::vector<V6Addr>& segment_list() const { return segment_list_; }
  const V6Addr& active_segment() const { return segment_list_[segments_left_]; }
  size_t encoded_size() const {
    return kSrhFixedBytes + kSidBytes * segment_list_.size();
  }

  // Requires segments_left() > 0.
  void AdvanceSegment() { --segments_left_; }

  friend bool operator==(const Srh&, const Srh&) = default;

 private:
  Srh() = default;

  uint8_t next_header_ = 0;
  uint8_t segments_left_ = 0;
  uint8_t flags_ = 0;
  uint16_t tag_ = 0;
  std::vector<V6Addr> segment_list_;
};

std::vector<uint8_t> EncodeSrh(const Srh& srh);
absl::StatusOr<Srh> DecodeSrh(std::span<const uint8_t> bytes);

struct OuterPacket {
  V6Addr src;
  V6Addr dst;
  uint8_t next_header = kProtoNoNext;
  uint8_t hop_limit = 64;
  std::optional<Srh> srh;
  std::vector<uint8_t> inner;  // serialized InnerPacket

  size_t encoded_size() const {
    return kIpv6HeaderBytes + (srh ? srh->encoded_size() : 0) + inner.size();
  }

  friend bool operator==(const OuterPacket&, const OuterPacket&) = default;
};

absl::Status ValidateOuter(const OuterPacket& packet);

std::vector<uint8_t> EncodeOuter(const OuterPacket& packet);
absl::StatusOr<OuterPacket> DecodeOuter(std::span<const uint8_t> bytes);

std::string HexString(std::span<const uint8_t> bytes);
absl::StatusOr<std::vector<uint8_t>> ParseHex(absl::string_view text);

}  // namespace srv6k8s

#endif  // SRV6K8S_NET_TYPES_H_
