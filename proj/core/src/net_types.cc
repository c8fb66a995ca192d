// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

#include "srv6k8s/net_types.h"

#include <arpa/inet.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"

namespace srv6k8s {
namespace {

// Names the token that made an IPv6 literal unparseable.
std::string OffendingV6Token(absl::string_view text) {
  if (text.empty()) return "<empty>";
  size_t first = text.find("::");
  if (text.find(":::") != absl::string_view::npos) return ":::";
  if (first != absl::string_view::npos &&
      text.find("::", first + 1) != absl::string_view::npos) {
    return "::";
  }
  for (absl::string_view group : absl::StrSplit(text, ':')) {
    if (group.empty()) continue;
    if (group.find('.') != absl::string_view::npos) {
      if (!V4Addr::Parse(group).ok()) return std::string(group);
      continue;
    }
    bool hex = std::all_of(group.begin(), group.end(), [](char c) {
      return absl::ascii_isxdigit(static_cast<unsigned char>(c));
    });
    if (!hex || group.size() > 4) return std::string(group);
  }
  return std::string(text);
}

void PutU16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

uint16_t GetU16(std::span<const uint8_t> b, size_t at) {
  return static_cast<uint16_t>((b[at] << 8) | b[at + 1]);
}

template <size_t N>
void PutBytes(std::vector<uint8_t>& out, const std::array<uint8_t, N>& b) {
  out.insert(out.end(), b.begin(), b.end());
}

V6Addr V6At(std::span<const uint8_t> b, size_t at) {
  V6Addr::Bytes bytes;
  std::copy_n(b.begin() + at, 16, bytes.begin());
  return V6Addr(bytes);
}

V4Addr V4At(std::span<const uint8_t> b, size_t at) {
  return V4Addr((uint32_t{b[at]} << 24) | (uint32_t{b[at + 1]} << 16) |
                (uint32_t{b[at + 2]} << 8) | uint32_t{b[at + 3]});
}

}  // namespace

absl::string_view FamilyName(Family family) {
  return family == Family::kV4 ? "v4" : "v6";
}

absl::StatusOr<V4Addr> V4Addr::Parse(absl::string_view text) {
  std::string s(text);
  in_addr raw{};
  if (inet_pton(AF_INET, s.c_str(), &raw) != 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed IPv4 address '", text, "'"));
  }
  return V4Addr(ntohl(raw.s_addr));
}

std::array<uint8_t, 4> V4Addr::bytes() const {
  return {static_cast<uint8_t>(bits_ >> 24), static_cast<uint8_t>(bits_ >> 16),
          static_cast<uint8_t>(bits_ >> 8), static_cast<uint8_t>(bits_)};
}

std::string V4Addr::ToString() const {
  auto b = bytes();
  return absl::StrCat(b[0], ".", b[1], ".", b[2], ".", b[3]);
}

absl::StatusOr<V6Addr> V6Addr::Parse(absl::string_view text) {
  std::string s(text);
  Bytes bytes{};
  if (inet_pton(AF_INET6, s.c_str(), bytes.data()) != 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed IPv6 address '", text, "': bad token '",
                     OffendingV6Token(text), "'"));
  }
  return V6Addr(bytes);
}

V6Addr V6Addr::MustParse(absl::string_view text) {
  auto addr = Parse(text);
  if (!addr.ok()) std::abort();
  return *addr;
}

std::string V6Addr::ToString() const {
  char buf[INET6_ADDRSTRLEN];
  inet_ntop(AF_INET6, bytes_.data(), buf, sizeof(buf));
  return buf;
}

V6Addr V6Addr::Plus(uint64_t offset) const {
  Bytes out = bytes_;
  unsigned carry = 0;
  for (int i = 15; i >= 0; --i) {
    unsigned add = static_cast<unsigned>(offset & 0xff) + carry;
    offset >>= 8;
    unsigned sum = out[i] + add;
    out[i] = static_cast<uint8_t>(sum);
    carry = sum >> 8;
    if (offset == 0 && carry == 0) break;
  }
  return V6Addr(out);
}

Family FamilyOf(const IpAddress& addr) {
  return std::holds_alternative<V4Addr>(addr) ? Family::kV4 : Family::kV6;
}

std::string ToString(const IpAddress& addr) {
  return std::visit([](const auto& a) { return a.ToString(); }, addr);
}

absl::StatusOr<IpAddress> ParseAddr(absl::string_view text) {
  if (text.find(':') != absl::string_view::npos) {
    auto v6 = V6Addr::Parse(text);
    if (!v6.ok()) return v6.status();
    return IpAddress(*v6);
  }
  auto v4 = V4Addr::Parse(text);
  if (!v4.ok()) return v4.status();
  return IpAddress(*v4);
}

IpAddress MaskAddress(const IpAddress& addr, int length) {
  if (const auto* v4 = std::get_if<V4Addr>(&addr)) {
    uint32_t mask = length == 0 ? 0 : ~uint32_t{0} << (32 - length);
    return V4Addr(v4->bits() & mask);
  }
  V6Addr::Bytes bytes = std::get<V6Addr>(addr).bytes();
  for (int i = 0; i < 16; ++i) {
    int keep = std::clamp(length - 8 * i, 0, 8);
    bytes[i] &= static_cast<uint8_t>(keep == 0 ? 0 : 0xff << (8 - keep));
  }
  return V6Addr(bytes);
}

absl::StatusOr<Prefix> Prefix::Make(const IpAddress& base, int length) {
  int bits = FamilyBits(FamilyOf(base));
  if (length < 0 || length > bits) {
    return absl::InvalidArgumentError(
        absl::StrCat("prefix length ", length, " out of range 0..", bits));
  }
  return Prefix(MaskAddress(base, length), length);
}

absl::StatusOr<Prefix> Prefix::Parse(absl::string_view text) {
  size_t slash = text.find('/');
  if (slash == absl::string_view::npos) {
    return absl::InvalidArgumentError(
        absl::StrCat("prefix '", text, "' lacks '/length'"));
  }
  auto base = ParseAddr(text.substr(0, slash));
  if (!base.ok()) return base.status();
  int length = 0;
  if (!absl::SimpleAtoi(text.substr(slash + 1), &length)) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed prefix length '", text.substr(slash + 1), "'"));
  }
  return Make(*base, length);
}

Prefix Prefix::HostRoute(const IpAddress& addr) {
  return Prefix(addr, FamilyBits(FamilyOf(addr)));
}

absl::StatusOr<bool> Prefix::Contains(const IpAddress& addr) const {
  if (FamilyOf(addr) != family()) {
    return absl::InvalidArgumentError(
        absl::StrCat("family mismatch: ", srv6k8s::ToString(addr),
                     " tested against ", ToString()));
  }
  return MaskAddress(addr, length_) == base_;
}

bool Prefix::Covers(const IpAddress& addr) const {
  return FamilyOf(addr) == family() && MaskAddress(addr, length_) == base_;
}

std::string Prefix::ToString() const {
  return absl::StrCat(srv6k8s::ToString(base_), "/", length_);
}

absl::Status ValidateInner(const InnerPacket& packet) {
  if (FamilyOf(packet.src) != packet.family ||
      FamilyOf(packet.dst) != packet.family) {
    return absl::InvalidArgumentError(
        "inner packet addresses do not match its family");
  }
  size_t header = packet.family == Family::kV4 ? 20 : 40;
  size_t limit = packet.family == Family::kV4 ? 0xffff - header : 0xffff;
  if (packet.payload.size() > limit) {
    return absl::InvalidArgumentError("inner payload too large");
  }
  return absl::OkStatus();
}

std::vector<uint8_t> EncodeInner(const InnerPacket& packet) {
  std::vector<uint8_t> out;
  if (packet.family == Family::kV4) {
    out.reserve(20 + packet.payload.size());
    out.push_back(0x45);
    out.push_back(0);
    PutU16(out, static_cast<uint16_t>(20 + packet.payload.size()));
    PutU16(out, 0);  // identification
    PutU16(out, 0);  // flags / fragment offset
    out.push_back(packet.hop_limit);
    out.push_back(kProtoNoNext);
    PutU16(out, 0);  // checksum, opaque
    PutBytes(out, std::get<V4Addr>(packet.src).bytes());
    PutBytes(out, std::get<V4Addr>(packet.dst).bytes());
  } else {
    out.reserve(40 + packet.payload.size());
    out.push_back(0x60);
    out.push_back(0);
    PutU16(out, 0);
    PutU16(out, static_cast<uint16_t>(packet.payload.size()));
    out.push_back(kProtoNoNext);
    out.push_back(packet.hop_limit);
    PutBytes(out, std::get<V6Addr>(packet.src).bytes());
    PutBytes(out, std::get<V6Addr>(packet.dst).bytes());
  }
  out.insert(out.end(), packet.payload.begin(), packet.payload.end());
  return out;
}

absl::StatusOr<InnerPacket> DecodeInner(std::span<const uint8_t> bytes) {
  if (bytes.empty()) return absl::DataLossError("empty inner packet");
  InnerPacket packet;
  int version = bytes[0] >> 4;
  if (version == 4) {
    if (bytes.size() < 20) return absl::DataLossError("truncated IPv4 header");
    if (bytes[0] != 0x45) {
      return absl::InvalidArgumentError("IPv4 options are not supported");
    }
    if (GetU16(bytes, 2) != bytes.size()) {
      return absl::DataLossError("IPv4 total length mismatch");
    }
    packet.family = Family::kV4;
    packet.hop_limit = bytes[8];
    packet.src = V4At(bytes, 12);
    packet.dst = V4At(bytes, 16);
    packet.payload.assign(bytes.begin() + 20, bytes.end());
  } else if (version == 6) {
    if (bytes.size() < 40) return absl::DataLossError("truncated IPv6 header");
    if (GetU16(bytes, 4) != bytes.size() - 40) {
      return absl::DataLossError("IPv6 payload length mismatch");
    }
    packet.family = Family::kV6;
    packet.hop_limit = bytes[7];
    packet.src = V6At(bytes, 8);
    packet.dst = V6At(bytes, 24);
    packet.payload.assign(bytes.begin() + 40, bytes.end());
  } else {
    return absl::InvalidArgumentError(
        absl::StrCat("inner packet has IP version ", version));
  }
  return packet;
}

absl::StatusOr<Srh> Srh::Make(uint8_t next_header,
                              std::vector<V6Addr> segment_list,
                              uint8_t segments_left, uint8_t flags,
                              uint16_t tag) {
  if (segment_list.empty()) {
    return absl::InvalidArgumentError("SRH needs at least one segment");
  }
  if (segment_list.size() > kMaxSrhSegments) {
    return absl::InvalidArgumentError(
        absl::StrCat("SRH holds at most ", kMaxSrhSegments, " segments, got ",
                     segment_list.size()));
  }
  if (segments_left >= segment_list.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("segments_left ", segments_left, " exceeds last_entry ",
                     segment_list.size() - 1));
  }
  Srh srh;
  srh.next_header_ = next_header;
  srh.segments_left_ = segments_left;
  srh.flags_ = flags;
  srh.tag_ = tag;
  srh.segment_list_ = std::move(segment_list);
  return srh;
}

absl::StatusOr<Srh> Srh::ForPath(uint8_t next_header,
                                 std::span<const V6Addr> path) {
  std::vector<V6Addr> stored(path.rbegin(), path.rend());
  uint8_t left = path.empty() ? 0 : static_cast<uint8_t>(path.size() - 1);
  return Make(next_header, std::move(stored), left);
}

std::vector<uint8_t> EncodeSrh(const Srh& srh) {
  std::vector<uint8_t> out;
  out.reserve(srh.encoded_size());
  out.push_back(srh.next_header());
  out.push_back(srh.hdr_ext_len());
  out.push_back(srh.routing_type());
  out.push_back(srh.segments_left());
  out.push_back(srh.last_entry());
  out.push_back(srh.flags());
  PutU16(out, srh.tag());
  for (const V6Addr& sid : srh.segment_list()) PutBytes(out, sid.bytes());
  return out;
}

absl::StatusOr<Srh> DecodeSrh(std::span<const uint8_t> bytes) {
  if (bytes.size() < kSrhFixedBytes) {
    return absl::DataLossError(
        absl::StrCat("SRH truncated: ", bytes.size(), " bytes"));
  }
  if (bytes[2] != kSrhRoutingType) {
    return absl::UnimplementedError(
        absl::StrCat("unsupported routing type ", bytes[2]));
  }
  size_t total = kSrhFixedBytes + 8 * size_t{bytes[1]};
  if (bytes.size() != total) {
    return absl::DataLossError(absl::StrCat("SRH truncated: hdr_ext_len ",
                                            bytes[1], " implies ", total,
                                            " bytes, have ", bytes.size()));
  }
  size_t entries = size_t{bytes[4]} + 1;
  if (bytes[1] % 2 != 0 || bytes[1] / 2 != entries) {
    return absl::InvalidArgumentError(absl::StrCat(
        "malformed SRH: hdr_ext_len ", bytes[1], " vs last_entry ", bytes[4]));
  }
  if (bytes[3] > bytes[4]) {
    return absl::InvalidArgumentError(absl::StrCat(
        "malformed SRH: segments_left ", bytes[3], " > last_entry ", bytes[4]));
  }
  std::vector<V6Addr> segments;
  segments.reserve(entries);
  for (size_t i = 0; i < entries; ++i) {
    segments.push_back(V6At(bytes, kSrhFixedBytes + kSidBytes * i));
  }
  return Srh::Make(bytes[0], std::move(segments), bytes[3], bytes[5],
                   GetU16(bytes, 6));
}

absl::Status ValidateOuter(const OuterPacket& packet) {
  if (packet.srh) {
    if (packet.next_header != kProtoRouting) {
      return absl::InvalidArgumentError(
          "outer next_header must be 43 when an SRH is present");
    }
    if (packet.dst != packet.srh->active_segment()) {
      return absl::InvalidArgumentError(
          "outer destination differs from the active segment");
    }
  }
  if (packet.encoded_size() - kIpv6HeaderBytes > 0xffff) {
    return absl::InvalidArgumentError("outer payload too large");
  }
  return absl::OkStatus();
}

std::vector<uint8_t> EncodeOuter(const OuterPacket& packet) {
  std::vector<uint8_t> out;
  out.reserve(packet.encoded_size());
  out.push_back(0x60);
  out.push_back(0);
  PutU16(out, 0);
  size_t payload = packet.encoded_size() - kIpv6HeaderBytes;
  PutU16(out, static_cast<uint16_t>(payload));
  out.push_back(packet.next_header);
  out.push_back(packet.hop_limit);
  PutBytes(out, packet.src.bytes());
  PutBytes(out, packet.dst.bytes());
  if (packet.srh) {
    std::vector<uint8_t> srh = EncodeSrh(*packet.srh);
    out.insert(out.end(), srh.begin(), srh.end());
  }
  out.insert(out.end(), packet.inner.begin(), packet.inner.end());
  return out;
}

absl::StatusOr<OuterPacket> DecodeOuter(std::span<const uint8_t> bytes) {
  if (bytes.size() < kIpv6HeaderBytes) {
    return absl::DataLossError("truncated IPv6 header");
  }
  if ((bytes[0] >> 4) != 6) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed outer packet: version nibble ", bytes[0] >> 4));
  }
  size_t payload = GetU16(bytes, 4);
  if (payload != bytes.size() - kIpv6HeaderBytes) {
    return absl::DataLossError(absl::StrCat(
        "outer payload_length ", payload, " but ",
        bytes.size() - kIpv6HeaderBytes, " bytes follow the header"));
  }
  OuterPacket packet;
  packet.next_header = bytes[6];
  packet.hop_limit = bytes[7];
  packet.src = V6At(bytes, 8);
  packet.dst = V6At(bytes, 24);
  std::span<const uint8_t> rest = bytes.subspan(kIpv6HeaderBytes);
  if (packet.next_header == kProtoRouting) {
    if (rest.size() < kSrhFixedBytes) {
      return absl::DataLossError("truncated SRH");
    }
    size_t srh_len = kSrhFixedBytes + 8 * size_t{rest[1]};
    if (rest.size() < srh_len) return absl::DataLossError("truncated SRH");
    auto srh = DecodeSrh(rest.first(srh_len));
    if (!srh.ok()) return srh.status();
    packet.srh = *std::move(srh);
    rest = rest.subspan(srh_len);
  }
  packet.inner.assign(rest.begin(), rest.end());
  return packet;
}

std::string HexString(std::span<const uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

absl::StatusOr<std::vector<uint8_t>> ParseHex(absl::string_view text) {
  std::vector<uint8_t> out;
  int pending = -1;
  for (char c : text) {
    if (absl::ascii_isspace(static_cast<unsigned char>(c))) continue;
    int v;
    if (c >= '0' && c <= '9') {
      v = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      v = c - 'a' + 10;
    } else if (c >= 'A' && c <= 'F') {
      v = c - 'A' + 10;
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("bad hex digit '", std::string(1, c), "'"));
    }
    if (pending < 0) {
      pending = v;
    } else {
      out.push_back(static_cast<uint8_t>(pending << 4 | v));
      pending = -1;
    }
  }
  if (pending >= 0) return absl::InvalidArgumentError("odd hex digit count");
  return out;
}

}  // namespace srv6k8s
