// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

// Two-step BGP signalling over a simulated session bus: pod-prefix
// reachability (step 1) and SR Policy SAFI 73 advertisements (step 2),
// plus an external policy-injector peer.

#ifndef SRV6K8S_BGP_CONTROL_H_
#define SRV6K8S_BGP_CONTROL_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "srv6k8s/net_types.h"

namespace srv6k8s {

inline constexpr uint16_t kAfiIpv6 = 2;
inline constexpr uint8_t kSafiSrPolicy = 73;

struct Step1Update {
  Prefix prefix;
  V6Addr next_hop;
  bool withdraw = false;

  friend bool operator==(const Step1Update&, const Step1Update&) = default;
};

struct SrPolicyNlri {
  uint32_t distinguisher = 0;
  uint32_t color = 0;
  V6Addr endpoint;

  friend bool operator==(const SrPolicyNlri&, const SrPolicyNlri&) = default;
};

// Segment type B: an SRv6 SID with its endpoint behavior code.
struct SegmentTypeB {
  V6Addr sid;
  uint16_t behavior = 0;

  friend bool operator==(const SegmentTypeB&, const SegmentTypeB&) = default;
};

struct SrPolicySafiUpdate {
  SrPolicyNlri nlri;
  V6Addr bsid;
  std::vector<SegmentTypeB> segments;
  uint32_t weight = 0;
  uint32_t preference = 0;
  uint8_t priority = 0;
  V6Addr next_hop;
  uint16_t afi = kAfiIpv6;
  uint8_t safi = kSafiSrPolicy;
  bool withdraw = false;

  // Family of the traffic the policy carries, read from the final
  // segment's decap behavior (19 = End.DT4, 18 = End.DT6).
  absl::StatusOr<Family> TrafficFamily() const;
  std::vector<V6Addr> Sids() const;

  friend bool operator==(const SrPolicySafiUpdate&,
                         const SrPolicySafiUpdate&) = default;
};

// afi 2 / safi 73, non-empty segment list, endpoint == next_hop.
absl::Status ValidateSrPolicyUpdate(const SrPolicySafiUpdate& update);

// Builds a validated update; the segment list must not be empty.
absl::StatusOr<SrPolicySafiUpdate> MakeSrPolicyUpdate(
    const SrPolicyNlri& nlri, const V6Addr& bsid,
    std::vector<SegmentTypeB> segments, uint32_t weight = 0,
    uint8_t priority = 0, uint32_t preference = 0);

// Wire layout (all integers big-endian):
//
//   AFI(2)=2 | SAFI(1)=73 | flags(1), bit 0 = withdraw | next hop(16)
//   NLRI: length in bits(1)=192 | distinguisher(4) | color(4) | endpoint(16)
//   Path attribute: flags(1)=0xD0 | type(1)=23 | length(2)
//     Tunnel TLV: type(2)=15 (SR Policy) | length(2) | sub-TLVs:
//       Binding SID   type 13  len(1)=18: flags(1)=0 reserved(1)=0 SID(16)
//       Preference    type 12  len(1)=6:  flags(1)=0 reserved(1)=0 pref(4)
//       Priority      type 15  len(1)=2:  priority(1) reserved(1)=0
//       Segment List  type 128 len(2):    reserved(1)=0, then
//         Weight      type 9   len(1)=6:  flags(1)=0 reserved(1)=0 weight(4)
//         Segment B   type 13  len(1)=20: flags(1)=0 reserved(1)=0
//                                         SID(16) behavior(2)
//
// Decoding is strict: every reserved or flag octet must be zero and every
// sub-TLV appears exactly once (segments at least once), so a successful
// decode re-encodes to the same bytes.
absl::StatusOr<std::vector<uint8_t>> EncodeSafi73(
    const SrPolicySafiUpdate& update);
absl::StatusOr<SrPolicySafiUpdate> DecodeSafi73(std::span<const uint8_t> bytes);

// Policy files in the injector's field vocabulary: nlri{distinguisher,
// color, endpoint}, iswithdraw, family{afi, safi}, segmentlist{weight,
// segments[{sid, behavior}]}, bsid, priority, nexthop. Unknown keys such as
// age, sourceasn and neighborip are accepted and ignored.
absl::StatusOr<SrPolicySafiUpdate> ParsePolicyFile(absl::string_view text);
std::string RenderPolicyFile(const SrPolicySafiUpdate& update);

enum class Channel : uint8_t { kUnicast, kSrPolicy };

// Step-1 updates travel as structures, SR policies as SAFI 73 wire bytes.
using BgpPayload = std::variant<Step1Update, std::vector<uint8_t>>;

struct Envelope {
  std::string from;
  std::string to;
  Channel channel = Channel::kUnicast;
  BgpPayload payload;
};

// Per-(sender, receiver, channel) FIFO queues. Which non-empty queue
// delivers next is drawn from a seeded generator, so cross-session order
// varies with the seed while each session stays in send order.
class SessionBus {
 public:
  using Handler = std::function<void(const Envelope&)>;

  explicit SessionBus(uint64_t seed) : rng_(seed) {}

  absl::Status AddPeer(const std::string& name, Handler handler);
  bool HasPeer(const std::string& name) const {
    return handlers_.contains(name);
  }
  absl::Status Send(Envelope envelope);

  // Delivers one message; false when nothing is queued.
  bool Step();
  // Steps until idle. Fails if more than `max_steps` deliveries are needed.
  absl::StatusOr<size_t> RunUntilQuiet(size_t max_steps);

  size_t pending() const;
  size_t delivered() const { return delivered_; }

 private:
  using SessionKey = std::tuple<std::string, std::string, Channel>;

  std::map<std::string, Handler> handlers_;
  std::map<SessionKey, std::deque<Envelope>> sessions_;
  std::mt19937_64 rng_;
  size_t delivered_ = 0;
};

struct BgpCounters {
  size_t step1 = 0;
  size_t step2 = 0;
  size_t injects = 0;
  size_t decode_errors = 0;
};

// Receiver callbacks for one cluster speaker. `external` is true when the
// sender is not a cluster node.
struct BgpReceiver {
  std::function<void(const std::string& from, const Step1Update&)> on_step1;
  std::function<void(const std::string& from, bool external,
                     const SrPolicySafiUpdate&)>
      on_policy;
  std::function<void(const std::string& from, const absl::Status&)>
      on_decode_error;
};

// Full mesh among cluster speakers plus external injector peers.
class BgpControlPlane {
 public:
  explicit BgpControlPlane(uint64_t seed) : bus_(seed) {}

  absl::Status AddClusterPeer(const std::string& name, BgpReceiver receiver);
  absl::Status AddExternalPeer(const std::string& name);

  // Step 1 to every other cluster peer.
  absl::Status AdvertisePrefix(const std::string& origin,
                               const Step1Update& update);
  // Step 2 to every other cluster peer.
  absl::Status AdvertisePolicy(const std::string& origin,
                               const SrPolicySafiUpdate& update);
  // Step 2 from an external peer to `targets`. Receivers decide whether
  // they accept the sender.
  absl::Status InjectPolicy(const std::string& injector,
                            const SrPolicySafiUpdate& update,
                            std::span<const std::string> targets);

  SessionBus& bus() { return bus_; }
  const BgpCounters& counters() const { return counters_; }
  const std::vector<std::string>& cluster_peers() const {
    return cluster_order_;
  }

 private:
  void Deliver(const Envelope& envelope);

  SessionBus bus_;
  std::map<std::string, BgpReceiver> cluster_;
  std::vector<std::string> cluster_order_;
  std::set<std::string> external_;
  BgpCounters counters_;
};

}  // namespace srv6k8s

#endif  // SRV6K8S_BGP_CONTROL_H_
