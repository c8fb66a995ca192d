// Copyright 2026 The srv6k8s Authors.
// SPDX-License-Identifier: Apache-2.0

#include "srv6k8s/bgp_control.h"

#include <algorithm>
#include <limits>

#include "absl/strings/str_cat.h"
#include "yaml_util.h"

namespace srv6k8s {

absl::StatusOr<SrPolicySafiUpdate> ParsePolicyFile(absl::string_view text) {
  auto root = yaml::Load(text, "policy file");
  if (!root.ok()) return root.status();
  if (!root->IsMap()) return yaml::Error(*root, "policy", "expected a mapping");

  SrPolicySafiUpdate u;
  auto nlri = yaml::Child(*root, "nlri", "policy");
  if (!nlri.ok()) return nlri.status();
  auto dist = yaml::Uint((*nlri)["distinguisher"], "nlri.distinguisher",
                         std::numeric_limits<uint32_t>::max());
  if (!dist.ok()) return dist.status();
  auto color = yaml::Uint((*nlri)["color"], "nlri.color",
                          std::numeric_limits<uint32_t>::max());
  if (!color.ok()) return color.status();
  auto endpoint = yaml::V6((*nlri)["endpoint"], "nlri.endpoint");
  if (!endpoint.ok()) return endpoint.status();
  u.nlri = {static_cast<uint32_t>(*dist), static_cast<uint32_t>(*color),
            *endpoint};

  if (YAML::Node w = (*root)["iswithdraw"]; w.IsDefined() && !w.IsNull()) {
    auto withdraw = yaml::Bool(w, "iswithdraw");
    if (!withdraw.ok()) return withdraw.status();
    u.withdraw = *withdraw;
  }
  if (YAML::Node fam = (*root)["family"]; fam.IsDefined()) {
    auto afi = yaml::Uint(fam["afi"], "family.afi", 0xffff);
    if (!afi.ok()) return afi.status();
    auto safi = yaml::Uint(fam["safi"], "family.safi", 0xff);
    if (!safi.ok()) return safi.status();
    u.afi = static_cast<uint16_t>(*afi);
    u.safi = static_cast<uint8_t>(*safi);
  }

  auto list = yaml::Child(*root, "segmentlist", "policy");
  if (!list.ok()) return list.status();
  if (YAML::Node w = (*list)["weight"]; w.IsDefined()) {
    auto weight = yaml::Uint(w, "segmentlist.weight",
                             std::numeric_limits<uint32_t>::max());
    if (!weight.ok()) return weight.status();
    u.weight = static_cast<uint32_t>(*weight);
  }
  auto segs = yaml::Child(*list, "segments", "segmentlist");
  if (!segs.ok()) return segs.status();
  if (!segs->IsSequence()) {
    return yaml::Error(*segs, "segmentlist.segments", "expected a list");
  }
  for (size_t i = 0; i < segs->size(); ++i) {
    std::string path = absl::StrCat("segmentlist.segments[", i, "]");
    YAML::Node seg = (*segs)[i];
    auto sid = yaml::V6(seg["sid"], path + ".sid");
    if (!sid.ok()) return sid.status();
    auto behavior = yaml::Uint(seg["behavior"], path + ".behavior", 0xffff);
    if (!behavior.ok()) return behavior.status();
    u.segments.push_back({*sid, static_cast<uint16_t>(*behavior)});
  }

  auto bsid = yaml::V6((*root)["bsid"], "bsid");
  if (!bsid.ok()) return bsid.status();
  u.bsid = *bsid;
  if (YAML::Node p = (*root)["priority"]; p.IsDefined()) {
    auto priority = yaml::Uint(p, "priority", 0xff);
    if (!priority.ok()) return priority.status();
    u.priority = static_cast<uint8_t>(*priority);
  }
  if (YAML::Node p = (*root)["preference"]; p.IsDefined()) {
    auto pref =
        yaml::Uint(p, "preference", std::numeric_limits<uint32_t>::max());
    if (!pref.ok()) return pref.status();
    u.preference = static_cast<uint32_t>(*pref);
  }
  if (YAML::Node nh = (*root)["nexthop"]; nh.IsDefined()) {
    auto next_hop = yaml::V6(nh, "nexthop");
    if (!next_hop.ok()) return next_hop.status();
    u.next_hop = *next_hop;
  } else {
    u.next_hop = u.nlri.endpoint;
  }
  if (auto s = ValidateSrPolicyUpdate(u); !s.ok()) return s;
  return u;
}

std::string RenderPolicyFile(const SrPolicySafiUpdate& u) {
  std::string out;
  absl::StrAppend(&out, "nlri:\n  distinguisher: ", u.nlri.distinguisher,
                  "\n  color: ", u.nlri.color,
                  "\n  endpoint: ", u.nlri.endpoint.ToString(), "\n");
  absl::StrAppend(&out, "iswithdraw: ", u.withdraw ? "true" : "false", "\n");
  absl::StrAppend(&out, "family:\n  afi: ", u.afi, "\n  safi: ", u.safi, "\n");
  absl::StrAppend(&out, "segmentlist:\n  weight: ", u.weight,
                  "\n  segments:\n");
  for (const SegmentTypeB& s : u.segments) {
    absl::StrAppend(&out, "  - sid: ", s.sid.ToString(),
                    "\n    behavior: ", s.behavior, "\n");
  }
  absl::StrAppend(&out, "bsid: ", u.bsid.ToString(), "\n");
  absl::StrAppend(&out, "priority: ", u.priority, "\n");
  if (u.preference != 0) {
    absl::StrAppend(&out, "preference: ", u.preference, "\n");
  }
  absl::StrAppend(&out, "nexthop: ", u.next_hop.ToString(), "\n");
  return out;
}

absl::Status SessionBus::AddPeer(const std::string& name, Handler handler) {
  if (!handlers_.emplace(name, std::move(handler)).second) {
    return absl::AlreadyExistsError(
        absl::StrCat("duplicate BGP peer '", name, "'"));
  }
  return absl::OkStatus();
}

absl::Status SessionBus::Send(Envelope envelope) {
  if (!handlers_.contains(envelope.from)) {
    return absl::NotFoundError(
        absl::StrCat("unknown BGP sender '", envelope.from, "'"));
  }
  if (!handlers_.contains(envelope.to)) {
    return absl::NotFoundError(
        absl::StrCat("unknown BGP receiver '", envelope.to, "'"));
  }
  SessionKey key{envelope.from, envelope.to, envelope.channel};
  sessions_[key].push_back(std::move(envelope));
  return absl::OkStatus();
}

bool SessionBus::Step() {
  std::vector<std::deque<Envelope>*> ready;
  for (auto& [key, queue] : sessions_) {
    if (!queue.empty()) ready.push_back(&queue);
  }
  if (ready.empty()) return false;
  std::deque<Envelope>* queue = ready[rng_() % ready.size()];
  Envelope envelope = std::move(queue->front());
  queue->pop_front();
  ++delivered_;
  // The handler may send more messages, so look it up only now.
  const Handler& handler = handlers_.at(envelope.to);
  if (handler) handler(envelope);
  return true;
}

absl::StatusOr<size_t> SessionBus::RunUntilQuiet(size_t max_steps) {
  size_t steps = 0;
  while (pending() > 0) {
    if (steps == max_steps) {
      return absl::DeadlineExceededError(
          absl::StrCat("BGP sessions not quiet after ", max_steps,
                       " deliveries (", pending(), " pending)"));
    }
    Step();
    ++steps;
  }
  return steps;
}

size_t SessionBus::pending() const {
  size_t n = 0;
  for (const auto& [key, queue] : sessions_) n += queue.size();
  return n;
}

absl::Status BgpControlPlane::AddClusterPeer(const std::string& name,
                                             BgpReceiver receiver) {
  if (auto s = bus_.AddPeer(name, [this](const Envelope& e) { Deliver(e); });
      !s.ok()) {
    return s;
  }
  cluster_.emplace(name, std::move(receiver));
  cluster_order_.push_back(name);
  return absl::OkStatus();
}

absl::Status BgpControlPlane::AddExternalPeer(const std::string& name) {
  if (auto s = bus_.AddPeer(name, nullptr); !s.ok()) return s;
  external_.insert(name);
  return absl::OkStatus();
}

absl::Status BgpControlPlane::AdvertisePrefix(const std::string& origin,
                                              const Step1Update& update) {
  if (!cluster_.contains(origin)) {
    return absl::NotFoundError(
        absl::StrCat("'", origin, "' is not a cluster BGP speaker"));
  }
  for (const std::string& peer : cluster_order_) {
    if (peer == origin) continue;
    if (auto s = bus_.Send({origin, peer, Channel::kUnicast, update});
        !s.ok()) {
      return s;
    }
    ++counters_.step1;
  }
  return absl::OkStatus();
}

absl::Status BgpControlPlane::AdvertisePolicy(
    const std::string& origin, const SrPolicySafiUpdate& update) {
  if (!cluster_.contains(origin)) {
    return absl::NotFoundError(
        absl::StrCat("'", origin, "' is not a cluster BGP speaker"));
  }
  auto wire = EncodeSafi73(update);
  if (!wire.ok()) return wire.status();
  for (const std::string& peer : cluster_order_) {
    if (peer == origin) continue;
    if (auto s = bus_.Send({origin, peer, Channel::kSrPolicy, *wire});
        !s.ok()) {
      return s;
    }
    ++counters_.step2;
  }
  return absl::OkStatus();
}

absl::Status BgpControlPlane::InjectPolicy(
    const std::string& injector, const SrPolicySafiUpdate& update,
    std::span<const std::string> targets) {
  if (!external_.contains(injector)) {
    return absl::NotFoundError(
        absl::StrCat("'", injector, "' is not an external BGP peer"));
  }
  auto wire = EncodeSafi73(update);
  if (!wire.ok()) return wire.status();
  for (const std::string& target : targets) {
    if (!cluster_.contains(target)) {
      return absl::NotFoundError(
          absl::StrCat("injection target '", target, "' is not a node"));
    }
  }
  for (const std::string& target : targets) {
    if (auto s = bus_.Send({injector, target, Channel::kSrPolicy, *wire});
        !s.ok()) {
      return s;
    }
    ++counters_.injects;
  }
  return absl::OkStatus();
}

void BgpControlPlane::Deliver(const Envelope& e) {
  const BgpReceiver& receiver = cluster_.at(e.to);
  if (const auto* step1 = std::get_if<Step1Update>(&e.payload)) {
    if (receiver.on_step1) receiver.on_step1(e.from, *step1);
    return;
  }
  const auto& wire = std::get<std::vector<uint8_t>>(e.payload);
  auto update = DecodeSafi73(wire);
  if (!update.ok()) {
    ++counters_.decode_errors;
    if (receiver.on_decode_error) {
      receiver.on_decode_error(e.from, update.status());
    }
    return;
  }
  if (receiver.on_policy) {
    receiver.on_policy(e.from, external_.contains(e.from), *update);
  }
}

}  // namespace srv6k8s
