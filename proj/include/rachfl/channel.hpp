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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rachfl/rng.hpp"
#include "rachfl/types.hpp"

namespace rachfl {

/// Framed slotted-ALOHA channel: each time-frame of `frame_duration` seconds
/// is split into `num_slots` equal slots on a link of `rate` floats/second.
struct ChannelConfig {
  int num_slots = 1;
  double rate = 1.0;
  double frame_duration = 1.0;

  /// Throws std::invalid_argument unless K >= 1, R > 0, T > 0 and a slot
  /// holds at least one float.
  void validate() const;
};

/// Floats deliverable in one collision-free slot: floor(R*T/K), where a
/// quotient within 1e-9 (relative) of an integer is taken as that integer.
/// Index overhead is not charged.
std::int64_t slot_capacity(const ChannelConfig& cfg);

enum class SlotKind : std::uint8_t { Idle, Success, Collision };

struct SlotEvent {
  SlotKind kind = SlotKind::Idle;
  /// Transmitters in this slot: empty, one user, or two and more.
  std::vector<UserId> users;
};

struct FrameOutcome {
  std::vector<SlotEvent> slots;
  /// Users with at least one Success slot, ascending and deduplicated.
  std::vector<UserId> received;

  int count(SlotKind kind) const;
  bool was_received(UserId u) const;
};

/// One contention round. Every active user independently transmits in each
/// slot with probability `tx_prob`; a slot succeeds iff exactly one user
/// transmits. Users keep contending after a success (no mid-frame feedback).
/// `active` must not contain duplicates.
FrameOutcome simulate_frame(std::span<const UserId> active, double tx_prob,
                            const ChannelConfig& cfg, Stream& rng);

/// Every active user is delivered; slots are filled round-robin with
/// successes. Used to pin the channel out of an experiment.
FrameOutcome perfect_frame(std::span<const UserId> active, const ChannelConfig& cfg);

/// Probability that a slot carries exactly one of `num_active` transmissions:
/// U_A * p * (1 - p)^(U_A - 1).
double expected_throughput(int num_active, double tx_prob);

}  // namespace rachfl
