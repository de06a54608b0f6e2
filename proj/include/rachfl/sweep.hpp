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

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rachfl/config.hpp"
#include "rachfl/metrics.hpp"

namespace rachfl {

/// One swept config key (dotted path such as "policy.kind") and its values.
struct GridAxis {
  std::string key;
  std::vector<nlohmann::json> values;
};

using Grid = std::vector<GridAxis>;

/// Accepts either a JSON object {"slots": [1, 5], ...} or the compact form
/// "slots=1,5;gamma=0,1" where each value is read as a JSON scalar (bare
/// words become strings).
Grid parse_grid(std::string_view spec);

using GridCoords = std::vector<std::pair<std::string, nlohmann::json>>;

/// Cross-product in row-major order (last axis fastest). An empty grid has a
/// single empty point.
std::vector<GridCoords> expand_grid(const Grid& grid);

/// base with every coordinate written at its dotted path, then re-validated.
ExperimentConfig apply_coords(const ExperimentConfig& base, const GridCoords& coords);

struct SweepPoint {
  GridCoords coords;
  std::optional<ExperimentConfig> config;
  std::vector<MetricsRow> rows;
  /// Config or run failures; the other points still run.
  std::vector<std::string> errors;
};

struct SweepResult {
  std::vector<std::string> keys;
  std::vector<SweepPoint> points;
};

/// Runs every grid point for every seed of its config on up to `jobs`
/// threads. Output order is fixed by (point, seed), not by completion order.
SweepResult sweep(const ExperimentConfig& base, const Grid& grid, std::size_t jobs);

/// Metrics CSV prefixed with `point` and one column per grid key.
void write_sweep_csv(const SweepResult& result, std::ostream& out);

}  // namespace rachfl
