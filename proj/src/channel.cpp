// Copyright 2026 The rachfl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "rachfl/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rachfl {

namespace {

/// floor(R*T/K), except that a quotient within 1e-9 (relative) of an integer
/// counts as that integer, so R = C/T style configs survive rounding.
double floored_capacity(const ChannelConfig& cfg) {
  const double q = cfg.rate * cfg.frame_duration / cfg.num_slots;
  const double r = std::round(q);
  return std::abs(q - r) <= 1e-9 * std::max(1.0, q) ? r : std::floor(q);
}

}  // namespace

void ChannelConfig::validate() const {
  if (num_slots < 1) throw std::invalid_argument("channel: num_slots must be >= 1");
  if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("channel: rate must be > 0");
  if (!(frame_duration > 0.0) || !std::isfinite(frame_duration))
    throw std::invalid_argument("channel: frame_duration must be > 0");
  if (floored_capacity(*this) < 1.0)
    throw std::invalid_argument("channel: slot capacity floor(R*T/K) is 0 for K = " +
                                std::to_string(num_slots));
}

std::int64_t slot_capacity(const ChannelConfig& cfg) {
  cfg.validate();
  return static_cast<std::int64_t>(floored_capacity(cfg));
}

int FrameOutcome::count(SlotKind kind) const {
  return static_cast<int>(
      std::count_if(slots.begin(), slots.end(), [kind](const SlotEvent& e) { return e.kind == kind; }));
}

bool FrameOutcome::was_received(UserId u) const {
  return std::binary_search(received.begin(), received.end(), u);
}

namespace {

void check_distinct(std::span<const UserId> active) {
  std::vector<UserId> sorted(active.begin(), active.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("simulate_frame: duplicate user in active set");
}

}  // namespace

FrameOutcome simulate_frame(std::span<const UserId> active, double tx_prob,
                            const ChannelConfig& cfg, Stream& rng) {
  if (!(tx_prob >= 0.0 && tx_prob <= 1.0))
    throw std::invalid_argument("simulate_frame: tx_prob must lie in [0, 1]");
  if (cfg.num_slots < 1) throw std::invalid_argument("simulate_frame: num_slots must be >= 1");
  check_distinct(active);

  FrameOutcome out;
  out.slots.resize(static_cast<std::size_t>(cfg.num_slots));
  for (auto& slot : out.slots) {
    for (UserId u : active)
      if (rng.bernoulli(tx_prob)) slot.users.push_back(u);
    if (slot.users.size() == 1) {
      slot.kind = SlotKind::Success;
      out.received.push_back(slot.users.front());
    } else if (slot.users.size() > 1) {
      slot.kind = SlotKind::Collision;
    }
  }
  std::sort(out.received.begin(), out.received.end());
  out.received.erase(std::unique(out.received.begin(), out.received.end()), out.received.end());
  return out;
}

FrameOutcome perfect_frame(std::span<const UserId> active, const ChannelConfig& cfg) {
  check_distinct(active);
  if (active.size() > static_cast<std::size_t>(cfg.num_slots))
    throw std::invalid_argument("perfect_frame: more active users than slots");
  FrameOutcome out;
  out.slots.resize(static_cast<std::size_t>(cfg.num_slots));
  for (std::size_t i = 0; i < active.size(); ++i) {
    out.slots[i].kind = SlotKind::Success;
    out.slots[i].users = {active[i]};
  }
  out.received.assign(active.begin(), active.end());
  std::sort(out.received.begin(), out.received.end());
  return out;
}

double expected_throughput(int num_active, double tx_prob) {
  if (num_active < 1) throw std::invalid_argument("expected_throughput: num_active must be >= 1");
  if (!(tx_prob >= 0.0 && tx_prob <= 1.0))
    throw std::invalid_argument("expected_throughput: tx_prob must lie in [0, 1]");
  return num_active * tx_prob * std::pow(1.0 - tx_prob, num_active - 1);
}

}  // namespace rachfl
