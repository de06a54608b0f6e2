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

namespace rachfl::stats {

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> x);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sided paired t-test of H1: mean(a - b) < 0.
TestResult paired_t_less(std::span<const double> a, std::span<const double> b);

/// Pearson chi-square goodness of fit against equal cell probabilities.
TestResult chi_square_uniform(std::span<const std::uint64_t> counts);

}  // namespace rachfl::stats
