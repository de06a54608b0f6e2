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

#include "rachfl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rachfl {

Selection select_fixed_random(std::size_t users, std::size_t m, Stream& rng) {
  if (m < 1 || m > users)
    throw std::invalid_argument("select_fixed_random: active count " + std::to_string(m) +
                                " outside [1, " + std::to_string(users) + "]");
  Selection out;
  for (auto u : sample_without_replacement(users, m, rng)) out.active.push_back(static_cast<UserId>(u));
  std::sort(out.active.begin(), out.active.end());
  out.tx_prob = 1.0 / static_cast<double>(m);
  return out;
}

BroadcastParams aog_broadcast(double global_grad_norm, std::span<const double> user_norms,
                              const AogConfig& cfg) {
  if (user_norms.empty()) throw std::invalid_argument("aog_broadcast: no users");
  const std::size_t users = user_norms.size();
  if (cfg.min_active < 1 || cfg.min_active > users)
    throw std::invalid_argument("aog_broadcast: min_active must lie in [1, U]");
  if (!(cfg.slope >= 0.0)) throw std::invalid_argument("aog_broadcast: slope must be >= 0");
  if (!(global_grad_norm >= 0.0)) throw std::invalid_argument("aog_broadcast: negative gradient norm");
  for (double n : user_norms)
    if (!(n >= 0.0)) throw std::invalid_argument("aog_broadcast: user norms must be >= 0");

  const double lo = static_cast<double>(cfg.min_active);
  const double hi = static_cast<double>(users);
  double target = std::round(cfg.slope * global_grad_norm + lo);
  if (!std::isfinite(target)) target = hi;
  const auto u_hat = static_cast<std::size_t>(std::clamp(target, lo, hi));

  std::vector<double> sorted(user_norms.begin(), user_norms.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(u_hat - 1), sorted.end(),
                   std::greater<>());

  BroadcastParams bp;
  bp.threshold = sorted[u_hat - 1];
  bp.tx_prob = 1.0 / static_cast<double>(u_hat);
  bp.target_active = u_hat;
  return bp;
}

BroadcastParams AogController::broadcast(double global_grad_norm, std::span<const double> user_norms) {
  if (cfg_.calibrate && !frozen_) {
    if (global_grad_norm > 0.0)
      cfg_.slope = static_cast<double>(user_norms.size() - cfg_.min_active) / global_grad_norm;
    frozen_ = true;
  }
  return aog_broadcast(global_grad_norm, user_norms, cfg_);
}

std::vector<UserId> rank_by_norm(std::span<const double> user_norms) {
  std::vector<UserId> order(user_norms.size());
  std::iota(order.begin(), order.end(), UserId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](UserId a, UserId b) { return user_norms[a] > user_norms[b]; });
  return order;
}

GenieResult genie_select(std::span<const double> user_norms, std::size_t probes,
                         const ChannelConfig& channel, const ProbeEval& eval, MetricSense sense,
                         const StreamKey& key) {
  if (user_norms.empty()) throw std::invalid_argument("genie_select: no users");
  if (probes < 1) throw std::invalid_argument("genie_select: need at least one channel probe");
  const auto ranking = rank_by_norm(user_norms);

  GenieResult out;
  std::size_t best = 0;
  for (std::size_t a = 1; a <= ranking.size(); ++a) {
    std::vector<UserId> candidate(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(a));
    std::sort(candidate.begin(), candidate.end());
    const double tx_prob = 1.0 / static_cast<double>(a);
    const StreamKey cand_key = key.child("candidate", a);
    double total = 0.0;
    for (std::size_t r = 0; r < probes; ++r) {
      Stream rng = cand_key.child("probe", r).open();
      const FrameOutcome outcome = simulate_frame(candidate, tx_prob, channel, rng);
      total += eval(candidate, outcome);
    }
    const double mean = total / static_cast<double>(probes);
    out.mean_metric.push_back(mean);

    const bool better = best == 0 || (sense == MetricSense::Minimize ? mean < out.mean_metric[best - 1]
                                                                     : mean > out.mean_metric[best - 1]);
    if (better && !std::isnan(mean)) {
      best = a;
      out.active = std::move(candidate);
      out.tx_prob = tx_prob;
    }
  }
  if (out.active.empty()) {  // every probe mean was NaN
    out.active = {ranking.front()};
    out.tx_prob = 1.0;
  }
  return out;
}

}  // namespace rachfl
