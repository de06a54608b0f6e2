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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rachfl {

/// One row of the per-frame output series.
struct FrameMetrics {
  std::size_t frame = 0;  // 1-based
  double loss = 0.0;
  std::optional<double> accuracy;
  std::size_t active_users = 0;
  std::size_t received_users = 0;
  int success_slots = 0;
  int collision_slots = 0;
  int idle_slots = 0;
  double mean_local_norm = 0.0;
  double global_grad_norm = 0.0;

  friend bool operator==(const FrameMetrics&, const FrameMetrics&) = default;
};

struct MetricsRow {
  std::uint64_t seed = 0;
  std::string policy;
  int slots = 0;
  double gamma = 0.0;
  FrameMetrics metrics;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

inline constexpr std::string_view kMetricsHeader =
    "frame,seed,policy,K,gamma,loss,accuracy,active_users,received_users,success_slots,"
    "collision_slots,idle_slots,mean_local_norm,global_grad_norm";

/// Renders a float with 6 significant digits ("%.6g").
std::string format_float(double x);

void write_metrics(std::span<const MetricsRow> rows, std::ostream& out);
/// Throws std::runtime_error naming the path on I/O failure.
void write_metrics(std::span<const MetricsRow> rows, const std::filesystem::path& path);

/// Parses a metrics CSV (exact header required).
std::vector<MetricsRow> read_metrics(std::istream& in);

nlohmann::json metrics_to_json(std::span<const MetricsRow> rows);

/// Final-frame statistics across seeds.
struct RunSummary {
  std::string policy;
  int slots = 0;
  double gamma = 0.0;
  std::vector<std::uint64_t> seeds;
  double final_loss_mean = 0.0;
  double final_loss_std = 0.0;
  std::optional<double> final_accuracy_mean;
};

RunSummary summarize(std::span<const MetricsRow> rows);
nlohmann::json summary_to_json(const RunSummary& s);

}  // namespace rachfl
