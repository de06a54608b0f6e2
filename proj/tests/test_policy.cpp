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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "rachfl/policy.hpp"

using namespace rachfl;

TEST_CASE("fixed random selection") {
  Stream rng(1);
  const auto all = select_fixed_random(4, 4, rng);
  CHECK(all.active == std::vector<UserId>{0, 1, 2, 3});
  CHECK(all.tx_prob == doctest::Approx(0.25));

  const auto one = select_fixed_random(1, 1, rng);
  CHECK(one.active == std::vector<UserId>{0});
  CHECK(one.tx_prob == 1.0);

  CHECK_THROWS_AS(select_fixed_random(4, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(select_fixed_random(4, 5, rng), std::invalid_argument);

  std::vector<int> hits(10, 0);
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    const auto s = select_fixed_random(10, 5, rng);
    REQUIRE(s.active.size() == 5);
    CHECK(std::is_sorted(s.active.begin(), s.active.end()));
    CHECK(std::adjacent_find(s.active.begin(), s.active.end()) == s.active.end());
    for (auto u : s.active) ++hits[u];
  }
  for (int u = 0; u < 10; ++u) CHECK(std::abs(hits[u] / double(draws) - 0.5) < 0.02);
}

TEST_CASE("AoG broadcast examples") {
  std::vector<double> norms{10, 9, 8, 7, 6, 5, 4, 3, 2, 1};
  const auto bp = aog_broadcast(3.0, norms, {.slope = 1.0, .min_active = 1});
  CHECK(bp.target_active == 4);
  CHECK(bp.threshold == 7.0);
  CHECK(bp.tx_prob == 0.25);
  CHECK(std::count_if(norms.begin(), norms.end(), [&](double n) { return apply_threshold(n, bp.threshold); }) == 4);

  // Zero slope keeps only the minimum.
  const auto flat = aog_broadcast(100.0, norms, {.slope = 0.0, .min_active = 2});
  CHECK(flat.target_active == 2);
  CHECK(flat.threshold == 9.0);
  CHECK(flat.tx_prob == 0.5);

  // All-equal norms put everyone at the threshold.
  const std::vector<double> same(6, 2.5);
  const auto tie = aog_broadcast(1.0, same, {.slope = 1.0, .min_active = 1});
  CHECK(tie.target_active == 2);
  CHECK(tie.threshold == 2.5);
  CHECK(tie.tx_prob == 0.5);
  for (double n : same) CHECK(apply_threshold(n, tie.threshold));

  // Large signal saturates at U.
  const auto sat = aog_broadcast(1e6, norms, {.slope = 1.0, .min_active = 1});
  CHECK(sat.target_active == 10);
  CHECK(sat.threshold == 1.0);

  CHECK_THROWS_AS(aog_broadcast(1.0, std::vector<double>{}, {}), std::invalid_argument);
  CHECK_THROWS_AS(aog_broadcast(1.0, norms, {.slope = 1.0, .min_active = 0}), std::invalid_argument);
  CHECK_THROWS_AS(aog_broadcast(1.0, norms, {.slope = 1.0, .min_active = 11}), std::invalid_argument);
  CHECK_THROWS_AS(aog_broadcast(-1.0, norms, {}), std::invalid_argument);
  CHECK_THROWS_AS(aog_broadcast(1.0, std::vector<double>{1.0, -2.0}, {}), std::invalid_argument);
}

TEST_CASE("AoG target is monotone, bounded, and consistent with the threshold") {
  Stream rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t users = 1 + rng.below(20);
    std::vector<double> norms(users);
    for (auto& n : norms) n = rng.bernoulli(0.3) ? std::floor(rng.uniform() * 3) : rng.uniform() * 5;
    AogConfig cfg{.slope = rng.uniform() * 4, .min_active = 1 + rng.below(users)};

    std::size_t prev = 0;
    for (double g = 0.0; g <= 6.0; g += 0.25) {
      const auto bp = aog_broadcast(g, norms, cfg);
      CHECK(bp.target_active >= cfg.min_active);
      CHECK(bp.target_active <= users);
      CHECK(bp.target_active >= prev);
      prev = bp.target_active;
      CHECK(bp.tx_prob == doctest::Approx(1.0 / bp.target_active));

      const auto above = std::count_if(norms.begin(), norms.end(),
                                       [&](double n) { return apply_threshold(n, bp.threshold); });
      const auto strictly = std::count_if(norms.begin(), norms.end(), [&](double n) { return n > bp.threshold; });
      CHECK(static_cast<std::size_t>(above) >= bp.target_active);
      CHECK(static_cast<std::size_t>(strictly) < bp.target_active);
    }
  }
}

TEST_CASE("threshold comparison is inclusive") {
  const double tau = 7.0;
  CHECK(apply_threshold(tau, tau));
  CHECK(apply_threshold(tau + 1e-12 * tau, tau));
  CHECK_FALSE(apply_threshold(tau - 1e-12 * tau, tau));
}

TEST_CASE("AoG calibration") {
  const std::vector<double> norms{5, 4, 3, 2, 1};
  AogController ctl({.slope = 0.0, .min_active = 1, .calibrate = true});
  const auto first = ctl.broadcast(2.0, norms);
  CHECK(ctl.slope() == doctest::Approx(2.0));
  CHECK(first.target_active == 5);
  const auto later = ctl.broadcast(1.0, norms);
  CHECK(ctl.slope() == doctest::Approx(2.0));
  CHECK(later.target_active == 3);

  AogController fixed({.slope = 0.5, .min_active = 1, .calibrate = false});
  fixed.broadcast(4.0, norms);
  CHECK(fixed.slope() == 0.5);

  // A zero signal on the first frame leaves the configured slope in place.
  AogController zero({.slope = 0.5, .min_active = 1, .calibrate = true});
  zero.broadcast(0.0, norms);
  zero.broadcast(2.0, norms);
  CHECK(zero.slope() == 0.5);
}

TEST_CASE("rank_by_norm") {
  CHECK(rank_by_norm(std::vector<double>{1, 3, 3, 2}) == std::vector<UserId>{1, 2, 3, 0});
  CHECK(rank_by_norm(std::vector<double>{}).empty());
}

namespace {

// Scalar toy model: users push w toward 1 by their payload; metric is (1 - w)^2.
struct Toy {
  std::vector<double> push;
  double operator()(std::span<const UserId>, const FrameOutcome& o) const {
    double w = 0.0;
    for (auto u : o.received) w += push[u];
    return (1.0 - w) * (1.0 - w);
  }
};

// Exact expectation of the toy metric over the slotted channel by enumerating
// per-slot winners.
double exact_expectation(const std::vector<UserId>& cand, int slots, const Toy& toy) {
  const double rho = 1.0 / cand.size();
  const double p_win = rho * std::pow(1.0 - rho, double(cand.size() - 1));
  const double p_none = 1.0 - cand.size() * p_win;
  std::vector<double> probs;
  std::vector<std::size_t> winner;  // cand.size() means nobody
  for (std::size_t i = 0; i <= cand.size(); ++i) probs.push_back(i < cand.size() ? p_win : p_none);

  double total = 0.0;
  std::size_t combos = 1;
  for (int k = 0; k < slots; ++k) combos *= cand.size() + 1;
  for (std::size_t code = 0; code < combos; ++code) {
    std::size_t c = code;
    double p = 1.0;
    std::vector<bool> got(cand.size(), false);
    for (int k = 0; k < slots; ++k) {
      const std::size_t pick = c % (cand.size() + 1);
      c /= cand.size() + 1;
      p *= probs[pick];
      if (pick < cand.size()) got[pick] = true;
    }
    double w = 0.0;
    for (std::size_t i = 0; i < cand.size(); ++i)
      if (got[i]) w += toy.push[cand[i]];
    total += p * (1.0 - w) * (1.0 - w);
  }
  return total;
}

const ChannelConfig kTwoSlots{.num_slots = 2, .rate = 2.0, .frame_duration = 1.0};

}  // namespace

TEST_CASE("genie with one user") {
  const Toy toy{{0.4}};
  const auto r = genie_select(std::vector<double>{3.0}, 3, kTwoSlots, toy, MetricSense::Minimize, StreamKey(1));
  CHECK(r.active == std::vector<UserId>{0});
  CHECK(r.tx_prob == 1.0);
  CHECK(r.mean_metric.size() == 1);
  CHECK(r.mean_metric[0] == doctest::Approx(0.36));
}

TEST_CASE("genie matches exhaustive expectation on a three-user instance") {
  // Norm order 2 > 0 > 1; candidates are {2}, {0,2}, {0,1,2}.
  const Toy toy{{0.45, 0.5, 0.5}};
  const std::vector<double> norms{2.0, 1.0, 3.0};
  const auto r = genie_select(norms, 20000, kTwoSlots, toy, MetricSense::Minimize, StreamKey(9));

  const std::vector<std::vector<UserId>> cands{{2}, {0, 2}, {0, 1, 2}};
  std::vector<double> exact;
  for (const auto& c : cands) exact.push_back(exact_expectation(c, 2, toy));
  for (std::size_t a = 0; a < 3; ++a) CHECK(r.mean_metric[a] == doctest::Approx(exact[a]).epsilon(0.03));

  const auto best = std::min_element(exact.begin(), exact.end()) - exact.begin();
  CHECK(r.active == cands[best]);
  CHECK(r.tx_prob == doctest::Approx(1.0 / cands[best].size()));
}

TEST_CASE("genie picks the best probe mean and is scale invariant") {
  Stream rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t users = 1 + rng.below(6);
    std::vector<double> norms(users);
    Toy toy;
    for (auto& n : norms) n = rng.uniform() * 4;
    for (std::size_t u = 0; u < users; ++u) toy.push.push_back(rng.uniform());
    const StreamKey key(100 + trial);

    const auto r = genie_select(norms, 4, kTwoSlots, toy, MetricSense::Minimize, key);
    const double chosen = r.mean_metric[r.count() - 1];
    for (double m : r.mean_metric) CHECK(chosen <= m);

    auto scaled = norms;
    for (auto& n : scaled) n *= 7.5;
    CHECK(genie_select(scaled, 4, kTwoSlots, toy, MetricSense::Minimize, key).active == r.active);

    const auto up = genie_select(norms, 4, kTwoSlots, toy, MetricSense::Maximize, key);
    for (double m : up.mean_metric) CHECK(up.mean_metric[up.count() - 1] >= m);
  }
}

TEST_CASE("genie ties go to the smaller count") {
  auto constant = [](std::span<const UserId>, const FrameOutcome&) { return 1.0; };
  const auto r = genie_select(std::vector<double>{1, 2, 3}, 2, kTwoSlots, constant, MetricSense::Minimize,
                              StreamKey(2));
  CHECK(r.active == std::vector<UserId>{2});
}

TEST_CASE("genie propagates errors") {
  auto boom = [](std::span<const UserId>, const FrameOutcome&) -> double { throw std::runtime_error("boom"); };
  CHECK_THROWS_WITH_AS(genie_select(std::vector<double>{1, 2}, 2, kTwoSlots, boom, MetricSense::Minimize,
                                    StreamKey(1)),
                       "boom", std::runtime_error);
  const Toy toy{{0.1}};
  CHECK_THROWS_AS(genie_select(std::vector<double>{}, 2, kTwoSlots, toy, MetricSense::Minimize, StreamKey(1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(genie_select(std::vector<double>{1}, 0, kTwoSlots, toy, MetricSense::Minimize, StreamKey(1)),
                  std::invalid_argument);
}
