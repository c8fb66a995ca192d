// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

// SR Policy SAFI 73 codec.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "absl/strings/str_cat.h"
#include "srv6k8s/bgp_control.h"

namespace srv6k8s {
namespace {

constexpr uint8_t kNlriBits = 192;
constexpr uint8_t kAttrFlags = 0xD0;  // optional, transitive, extended length
constexpr uint8_t kAttrTunnelEncap = 23;
constexpr uint16_t kTunnelSrPolicy = 15;

constexpr uint8_t kSubTlvPreference = 12;
constexpr uint8_t kSubTlvBindingSid = 13;
constexpr uint8_t kSubTlvPriority = 15;
constexpr uint8_t kSubTlvSegmentList = 128;
constexpr uint8_t kSegTlvWeight = 9;
constexpr uint8_t kSegTlvTypeB = 13;

constexpr uint8_t kLenBindingSid = 18;
constexpr uint8_t kLenPreference = 6;
constexpr uint8_t kLenPriority = 2;
constexpr uint8_t kLenWeight = 6;
constexpr uint8_t kLenTypeB = 20;

constexpr uint16_t kCodeEndDT6 = 18;
constexpr uint16_t kCodeEndDT4 = 19;

class Writer {
 public:
  void U8(uint8_t v) { out_.push_back(v); }
  void U16(uint16_t v) {
    U8(static_cast<uint8_t>(v >> 8));
    U8(static_cast<uint8_t>(v));
  }
  void U32(uint32_t v) {
    U16(static_cast<uint16_t>(v >> 16));
    U16(static_cast<uint16_t>(v));
  }
  void Addr(const V6Addr& a) {
    out_.insert(out_.end(), a.bytes().begin(), a.bytes().end());
  }
  // Reserves a 2-byte length at the current position.
  size_t Mark() {
    U16(0);
    return out_.size();
  }
  void Patch(size_t mark) {
    size_t len = out_.size() - mark;
    out_[mark - 2] = static_cast<uint8_t>(len >> 8);
    out_[mark - 1] = static_cast<uint8_t>(len);
  }
  std::vector<uint8_t> Take() { return std::move(out_); }

 private:
  std::vector<uint8_t> out_;
};

// Bounds-checked big-endian reader. Every read past the end fails.
class Reader {
 public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  size_t remaining() const { return bytes_.size() - pos_; }
  size_t pos() const { return pos_; }

  absl::Status Need(size_t n, absl::string_view what) const {
    if (remaining() < n) {
      return absl::DataLossError(absl::StrCat("SAFI 73 truncated in ", what,
                                              " at offset ", pos_, ": need ", n,
                                              " bytes, have ", remaining()));
    }
    return absl::OkStatus();
  }
  uint8_t U8() { return bytes_[pos_++]; }
  uint16_t U16() {
    uint16_t hi = U8();
    return static_cast<uint16_t>(hi << 8 | U8());
  }
  uint32_t U32() {
    uint32_t hi = U16();
    return hi << 16 | U16();
  }
  V6Addr Addr() {
    V6Addr::Bytes b;
    for (uint8_t& x : b) x = U8();
    return V6Addr(b);
  }
  Reader Sub(size_t n) {
    Reader r(bytes_.subspan(pos_, n));
    pos_ += n;
    return r;
  }

 private:
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

absl::Status Invalid(absl::string_view what) {
  return absl::InvalidArgumentError(absl::StrCat("SAFI 73 malformed: ", what));
}

absl::Status ExpectZero(uint8_t v, absl::string_view field) {
  if (v != 0) return Invalid(absl::StrCat("non-zero ", field));
  return absl::OkStatus();
}

absl::Status ExpectLen(uint16_t got, uint16_t want, absl::string_view tlv) {
  if (got != want) {
    return Invalid(absl::StrCat(tlv, " length ", got, ", expected ", want));
  }
  return absl::OkStatus();
}

absl::Status DecodeSegmentList(Reader r, SrPolicySafiUpdate& out) {
  if (auto s = r.Need(1, "segment list"); !s.ok()) return s;
  if (auto s = ExpectZero(r.U8(), "segment list reserved"); !s.ok()) return s;
  bool weight_seen = false;
  while (r.remaining() > 0) {
    if (auto s = r.Need(2, "segment list sub-TLV"); !s.ok()) return s;
    uint8_t type = r.U8();
    uint8_t len = r.U8();
    if (auto s = r.Need(len, "segment list sub-TLV"); !s.ok()) return s;
    Reader v = r.Sub(len);
    switch (type) {
      case kSegTlvWeight: {
        if (weight_seen) return Invalid("duplicate weight sub-TLV");
        if (!out.segments.empty()) return Invalid("weight after segments");
        if (auto s = ExpectLen(len, kLenWeight, "weight"); !s.ok()) return s;
        if (auto s = ExpectZero(v.U8(), "weight flags"); !s.ok()) return s;
        if (auto s = ExpectZero(v.U8(), "weight reserved"); !s.ok()) return s;
        out.weight = v.U32();
        weight_seen = true;
        break;
      }
      case kSegTlvTypeB: {
        if (auto s = ExpectLen(len, kLenTypeB, "segment type B"); !s.ok()) {
          return s;
        }
        if (auto s = ExpectZero(v.U8(), "segment flags"); !s.ok()) return s;
        if (auto s = ExpectZero(v.U8(), "segment reserved"); !s.ok()) return s;
        SegmentTypeB seg;
        seg.sid = v.Addr();
        seg.behavior = v.U16();
        out.segments.push_back(seg);
        break;
      }
      default:
        return absl::UnimplementedError(
            absl::StrCat("SAFI 73: unknown segment list sub-TLV type ", type));
    }
  }
  if (!weight_seen) return Invalid("missing weight sub-TLV");
  if (out.segments.empty()) return Invalid("empty segment list");
  return absl::OkStatus();
}

absl::Status DecodeTunnel(Reader r, SrPolicySafiUpdate& out) {
  bool bsid = false, pref = false, prio = false, list = false;
  // Canonical order: BSID, preference, priority, segment list.
  int last = -1;
  while (r.remaining() > 0) {
    if (auto s = r.Need(1, "sub-TLV type"); !s.ok()) return s;
    uint8_t type = r.U8();
    uint16_t len;
    if (type >= 128) {
      if (auto s = r.Need(2, "sub-TLV length"); !s.ok()) return s;
      len = r.U16();
    } else {
      if (auto s = r.Need(1, "sub-TLV length"); !s.ok()) return s;
      len = r.U8();
    }
    if (auto s = r.Need(len, "sub-TLV value"); !s.ok()) return s;
    Reader v = r.Sub(len);
    int rank;
    switch (type) {
      case kSubTlvBindingSid:
        rank = 0;
        if (bsid) return Invalid("duplicate binding SID sub-TLV");
        if (auto s = ExpectLen(len, kLenBindingSid, "binding SID"); !s.ok()) {
          return s;
        }
        if (auto s = ExpectZero(v.U8(), "binding SID flags"); !s.ok()) {
          return s;
        }
        if (auto s = ExpectZero(v.U8(), "binding SID reserved"); !s.ok()) {
          return s;
        }
        out.bsid = v.Addr();
        bsid = true;
        break;
      case kSubTlvPreference:
        rank = 1;
        if (pref) return Invalid("duplicate preference sub-TLV");
        if (auto s = ExpectLen(len, kLenPreference, "preference"); !s.ok()) {
          return s;
        }
        if (auto s = ExpectZero(v.U8(), "preference flags"); !s.ok()) {
          return s;
        }
        if (auto s = ExpectZero(v.U8(), "preference reserved"); !s.ok()) {
          return s;
        }
        out.preference = v.U32();
        pref = true;
        break;
      case kSubTlvPriority:
        rank = 2;
        if (prio) return Invalid("duplicate priority sub-TLV");
        if (auto s = ExpectLen(len, kLenPriority, "priority"); !s.ok()) {
          return s;
        }
        out.priority = v.U8();
        if (auto s = ExpectZero(v.U8(), "priority reserved"); !s.ok()) {
          return s;
        }
        prio = true;
        break;
      case kSubTlvSegmentList:
        rank = 3;
        if (list) return Invalid("more than one segment list");
        if (auto s = DecodeSegmentList(v, out); !s.ok()) return s;
        list = true;
        break;
      default:
        return absl::UnimplementedError(
            absl::StrCat("SAFI 73: unknown sub-TLV type ", type));
    }
    if (rank <= last) return Invalid("sub-TLVs out of order");
    last = rank;
  }
  if (!bsid) return Invalid("missing binding SID sub-TLV");
  if (!pref) return Invalid("missing preference sub-TLV");
  if (!prio) return Invalid("missing priority sub-TLV");
  if (!list) return Invalid("missing segment list sub-TLV");
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<Family> SrPolicySafiUpdate::TrafficFamily() const {
  if (segments.empty()) return Invalid("empty segment list");
  switch (segments.back().behavior) {
    case kCodeEndDT4:
      return Family::kV4;
    case kCodeEndDT6:
      return Family::kV6;
    default:
      return absl::InvalidArgumentError(absl::StrCat(
          "SR policy ", bsid.ToString(), ": final segment behavior ",
          segments.back().behavior, " is not End.DT4 (19) or End.DT6 (18)"));
  }
}

std::vector<V6Addr> SrPolicySafiUpdate::Sids() const {
  std::vector<V6Addr> out;
  out.reserve(segments.size());
  for (const SegmentTypeB& s : segments) out.push_back(s.sid);
  return out;
}

absl::Status ValidateSrPolicyUpdate(const SrPolicySafiUpdate& u) {
  if (u.afi != kAfiIpv6) {
    return absl::InvalidArgumentError(
        absl::StrCat("SR policy: afi ", u.afi, ", expected 2"));
  }
  if (u.safi != kSafiSrPolicy) {
    return absl::InvalidArgumentError(
        absl::StrCat("SR policy: safi ", u.safi, ", expected 73"));
  }
  if (u.segments.empty()) {
    return absl::InvalidArgumentError("SR policy: empty segment list");
  }
  if (u.segments.size() > kMaxSrhSegments) {
    return absl::InvalidArgumentError(
        absl::StrCat("SR policy: ", u.segments.size(), " segments exceed ",
                     kMaxSrhSegments));
  }
  if (u.nlri.endpoint != u.next_hop) {
    return absl::InvalidArgumentError(
        absl::StrCat("SR policy: endpoint ", u.nlri.endpoint.ToString(),
                     " differs from next hop ", u.next_hop.ToString()));
  }
  return absl::OkStatus();
}

absl::StatusOr<SrPolicySafiUpdate> MakeSrPolicyUpdate(
    const SrPolicyNlri& nlri, const V6Addr& bsid,
    std::vector<SegmentTypeB> segments, uint32_t weight, uint8_t priority,
    uint32_t preference) {
  SrPolicySafiUpdate u;
  u.nlri = nlri;
  u.bsid = bsid;
  u.segments = std::move(segments);
  u.weight = weight;
  u.priority = priority;
  u.preference = preference;
  u.next_hop = nlri.endpoint;
  if (auto s = ValidateSrPolicyUpdate(u); !s.ok()) return s;
  return u;
}

absl::StatusOr<std::vector<uint8_t>> EncodeSafi73(const SrPolicySafiUpdate& u) {
  if (auto s = ValidateSrPolicyUpdate(u); !s.ok()) return s;
  Writer w;
  w.U16(u.afi);
  w.U8(u.safi);
  w.U8(u.withdraw ? 1 : 0);
  w.Addr(u.next_hop);
  w.U8(kNlriBits);
  w.U32(u.nlri.distinguisher);
  w.U32(u.nlri.color);
  w.Addr(u.nlri.endpoint);

  w.U8(kAttrFlags);
  w.U8(kAttrTunnelEncap);
  size_t attr = w.Mark();
  w.U16(kTunnelSrPolicy);
  size_t tunnel = w.Mark();

  w.U8(kSubTlvBindingSid);
  w.U8(kLenBindingSid);
  w.U16(0);
  w.Addr(u.bsid);

  w.U8(kSubTlvPreference);
  w.U8(kLenPreference);
  w.U16(0);
  w.U32(u.preference);

  w.U8(kSubTlvPriority);
  w.U8(kLenPriority);
  w.U8(u.priority);
  w.U8(0);

  w.U8(kSubTlvSegmentList);
  size_t list = w.Mark();
  w.U8(0);
  w.U8(kSegTlvWeight);
  w.U8(kLenWeight);
  w.U16(0);
  w.U32(u.weight);
  for (const SegmentTypeB& seg : u.segments) {
    w.U8(kSegTlvTypeB);
    w.U8(kLenTypeB);
    w.U16(0);
    w.Addr(seg.sid);
    w.U16(seg.behavior);
  }
  w.Patch(list);
  w.Patch(tunnel);
  w.Patch(attr);
  return w.Take();
}

absl::StatusOr<SrPolicySafiUpdate> DecodeSafi73(
    std::span<const uint8_t> bytes) {
  Reader r(bytes);
  SrPolicySafiUpdate u;
  if (auto s = r.Need(4 + 16, "header"); !s.ok()) return s;
  u.afi = r.U16();
  u.safi = r.U8();
  uint8_t flags = r.U8();
  if (flags > 1) return Invalid(absl::StrCat("unknown flags ", flags));
  u.withdraw = flags == 1;
  u.next_hop = r.Addr();
  if (u.afi != kAfiIpv6 || u.safi != kSafiSrPolicy) {
    return absl::InvalidArgumentError(
        absl::StrCat("SAFI 73: unexpected afi/safi ", u.afi, "/", u.safi));
  }

  if (auto s = r.Need(1 + kNlriBits / 8, "NLRI"); !s.ok()) return s;
  uint8_t nlri_bits = r.U8();
  if (nlri_bits != kNlriBits) {
    return Invalid(absl::StrCat("NLRI length ", nlri_bits, " bits"));
  }
  u.nlri.distinguisher = r.U32();
  u.nlri.color = r.U32();
  u.nlri.endpoint = r.Addr();

  if (auto s = r.Need(4, "path attribute"); !s.ok()) return s;
  uint8_t attr_flags = r.U8();
  uint8_t attr_type = r.U8();
  uint16_t attr_len = r.U16();
  if (attr_flags != kAttrFlags) {
    return Invalid(absl::StrCat("attribute flags ", attr_flags));
  }
  if (attr_type != kAttrTunnelEncap) {
    return absl::UnimplementedError(
        absl::StrCat("SAFI 73: unknown path attribute type ", attr_type));
  }
  if (r.remaining() != attr_len) {
    return absl::DataLossError(absl::StrCat("SAFI 73: attribute length ",
                                            attr_len, " but ", r.remaining(),
                                            " bytes follow"));
  }
  Reader attr = r.Sub(attr_len);
  if (auto s = attr.Need(4, "tunnel TLV"); !s.ok()) return s;
  uint16_t tunnel_type = attr.U16();
  uint16_t tunnel_len = attr.U16();
  if (tunnel_type != kTunnelSrPolicy) {
    return absl::UnimplementedError(
        absl::StrCat("SAFI 73: unknown tunnel type ", tunnel_type));
  }
  if (attr.remaining() != tunnel_len) {
    return absl::DataLossError(absl::StrCat("SAFI 73: tunnel length ",
                                            tunnel_len, " but ",
                                            attr.remaining(), " bytes follow"));
  }
  if (auto s = DecodeTunnel(attr.Sub(tunnel_len), u); !s.ok()) return s;
  if (auto s = ValidateSrPolicyUpdate(u); !s.ok()) return s;
  return u;
}

}  // namespace srv6k8s
