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
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rachfl/channel.hpp"
#include "rachfl/config.hpp"
#include "rachfl/metrics.hpp"
#include "rachfl/policy.hpp"
#include "rachfl/sparsify.hpp"
#include "rachfl/task.hpp"

namespace rachfl {

struct UserState {
  UserId id = 0;
  Dataset shard;
  /// Error-feedback memory, zero at start.
  Vector memory;
  /// ||g + m|| of the current frame.
  double last_local_norm = 0.0;
};

struct LocalGradient {
  Vector gradient;
  /// gradient + memory, the vector that gets compressed.
  Vector corrected;
  double local_norm = 0.0;
};

/// Draws the user's minibatch gradient at w and forms g + m.
LocalGradient local_gradient(UserState& user, std::span<const double> w, std::size_t batch,
                             Stream& rng);

/// top-k or rand-k of v with k = slot capacity.
SparseUpdate compress(std::span<const double> v, std::size_t slot_cap,
                      const CompressionConfig& cfg, Stream& rng);

struct UserFrameStep {
  bool active = false;
  std::optional<SparseUpdate> payload;
  Vector gradient;
};

/// Local gradient, threshold test against bp.threshold, and compression of
/// g + m when active. `rng` feeds the minibatch draw, `compress_rng` rand-k.
UserFrameStep user_frame_step(UserState& user, std::span<const double> w,
                              const BroadcastParams& bp, std::size_t batch, std::size_t slot_cap,
                              Stream& rng, const CompressionConfig& compression = {},
                              Stream* compress_rng = nullptr);

/// m <- gamma * m + g - densify(payload) when delivered, gamma * m + g
/// otherwise. Throws std::invalid_argument on a dimension mismatch or a
/// delivered user without payload.
void memory_update(UserState& user, bool delivered, std::span<const double> gradient,
                   const SparseUpdate* payload, double gamma);

/// w - lr * sum of payloads (mode Sum) or the mean of them (mode Mean).
/// No payloads returns w unchanged.
Vector ps_aggregate(std::span<const double> w, std::span<const SparseUpdate> payloads,
                    double learning_rate, AggregateMode mode);

struct ModelSummary {
  double norm = 0.0;
  std::uint64_t hash = 0;

  friend bool operator==(const ModelSummary&, const ModelSummary&) = default;
};

struct FrameRecord {
  std::size_t frame = 0;
  BroadcastParams broadcast;
  std::vector<UserId> active;
  FrameOutcome outcome;
  ModelSummary model_before;
  ModelSummary model_after;
  FrameMetrics metrics;
  /// Genie policy only.
  std::optional<GenieResult> genie;
};

/// Aborts a run; the message carries the frame index.
class RunError : public std::runtime_error {
 public:
  RunError(std::size_t frame, const std::string& what);
  std::size_t frame() const noexcept { return frame_; }

 private:
  std::size_t frame_;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<FrameRecord> frames;
  Vector initial_model;
  Vector final_model;
  /// Generating weights (regression only).
  Vector w_true;
  std::vector<UserState> users;
};

/// Observer called after every frame with the committed model and the user
/// states as they enter the next frame.
using FrameObserver =
    std::function<void(const FrameRecord&, std::span<const double> model, std::span<const UserState>)>;

/// Runs cfg.frames time-frames for one seed. Every random draw is taken from
/// StreamKey(seed) / ..., so a run depends only on (cfg, seed).
RunResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                         const FrameObserver& observer = {});

/// Flattens a run into CSV rows.
std::vector<MetricsRow> metrics_rows(const ExperimentConfig& cfg, const RunResult& run);

}  // namespace rachfl
