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
#include <functional>
#include <span>
#include <vector>

#include "rachfl/channel.hpp"
#include "rachfl/rng.hpp"
#include "rachfl/types.hpp"

namespace rachfl {

/// What the PS sends with the model each frame.
struct BroadcastParams {
  double threshold = 0.0;
  double tx_prob = 1.0;
  /// The active-user count the parameters were sized for (U-hat).
  std::size_t target_active = 0;
};

/// U-hat = slope * ||g|| + min_active, clamped to [min_active, U].
struct AogConfig {
  double slope = 0.0;
  std::size_t min_active = 1;
  /// Fit the slope on the first frame so that U-hat starts at U, then freeze.
  bool calibrate = true;

  friend bool operator==(const AogConfig&, const AogConfig&) = default;
};

struct Selection {
  std::vector<UserId> active;  // ascending
  double tx_prob = 1.0;
};

/// Uniform random m-subset of [0, users) with tx_prob = 1/m.
Selection select_fixed_random(std::size_t users, std::size_t m, Stream& rng);

/// Threshold and transmission probability for one frame. `user_norms` holds
/// ||g + m|| for every user (the PS reads them directly). The threshold is
/// the U-hat-th largest norm, so users tied with it are all activated even if
/// that exceeds U-hat; tx_prob stays 1/U-hat.
BroadcastParams aog_broadcast(double global_grad_norm, std::span<const double> user_norms,
                              const AogConfig& cfg);

/// Activation rule: local_norm >= threshold.
inline bool apply_threshold(double local_norm, double threshold) { return local_norm >= threshold; }

/// Holds the AoG slope across frames, including the one-shot calibration.
class AogController {
 public:
  explicit AogController(AogConfig cfg) : cfg_(cfg) {}

  BroadcastParams broadcast(double global_grad_norm, std::span<const double> user_norms);
  double slope() const { return cfg_.slope; }

 private:
  AogConfig cfg_;
  bool frozen_ = false;
};

/// Users sorted by descending norm; equal norms keep ascending id order.
std::vector<UserId> rank_by_norm(std::span<const double> user_norms);

enum class MetricSense : std::uint8_t { Minimize, Maximize };

/// Scores one probe: the model that would result from aggregating the
/// payloads of `active` delivered through `outcome`.
using ProbeEval = std::function<double(std::span<const UserId> active, const FrameOutcome& outcome)>;

struct GenieResult {
  std::vector<UserId> active;  // ascending
  double tx_prob = 1.0;
  /// mean_metric[a - 1] is the probe average for the top-a candidate.
  std::vector<double> mean_metric;

  std::size_t count() const { return active.size(); }
};

/// Genie-aided selection. For a = 1..U the candidate is the a largest-norm
/// users contending with probability 1/a; each candidate is scored by the
/// mean of `eval` over `probes` channel realizations drawn from
/// key/candidate a/probe r. The best mean wins, ties to the smaller count.
GenieResult genie_select(std::span<const double> user_norms, std::size_t probes,
                         const ChannelConfig& channel, const ProbeEval& eval, MetricSense sense,
                         const StreamKey& key);

}  // namespace rachfl
