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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rachfl/channel.hpp"
#include "rachfl/policy.hpp"
#include "rachfl/sparsify.hpp"
#include "rachfl/task.hpp"

namespace rachfl {

enum class PolicyKind : std::uint8_t { FixedRandom, Aog, Genie };

/// Source of ||g|| fed to the AoG line. MeanGradient is the norm of the
/// current FedAvg gradient (1/U) sum_u g_u; LastAggregate is the norm of the
/// mean payload the PS received in the previous frame.
enum class GlobalSignal : std::uint8_t { MeanGradient, LastAggregate };

/// Which users take the compression branch of the memory update: those
/// delivered through the channel, or every user that contended.
enum class KnSemantics : std::uint8_t { Received, Active };

enum class AggregateMode : std::uint8_t { Sum, Mean };

enum class ChannelModel : std::uint8_t { SlottedAloha, Perfect };

struct PolicyConfig {
  PolicyKind kind = PolicyKind::Aog;
  std::size_t active = 0;           // fixed_random: m (0 means all users)
  std::optional<double> tx_prob;    // fixed_random: override of 1/m
  AogConfig aog;
  GlobalSignal global_signal = GlobalSignal::MeanGradient;
  std::size_t probes = 5;           // genie: channel realizations per candidate

  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

struct CompressionConfig {
  Sparsifier kind = Sparsifier::TopK;
  bool rescale_rand_k = false;

  friend bool operator==(const CompressionConfig&, const CompressionConfig&) = default;
};

struct TaskConfig {
  TaskKind kind = TaskKind::Regression;
  std::size_t features = 20;
  int classes = 4;
  std::size_t points = 2000;
  std::size_t test_points = 1000;
  double noise = 0.01;
  double separation = 3.0;
  std::size_t batch = 20;
  double label_skew = 0.0;

  friend bool operator==(const TaskConfig&, const TaskConfig&) = default;
};

struct ExperimentConfig {
  std::size_t users = 10;
  std::size_t frames = 100;
  int slots = 10;
  /// R*T in floats per frame (T normalized to 1). Unset means one full model
  /// per frame, so the per-slot budget is floor(d/K).
  std::optional<std::int64_t> budget;
  double gamma = 1.0;
  double learning_rate = 0.01;
  /// eta_n = learning_rate / (1 + lr_decay * n).
  double lr_decay = 0.0;
  AggregateMode aggregate = AggregateMode::Sum;
  KnSemantics kn_semantics = KnSemantics::Received;
  ChannelModel channel = ChannelModel::SlottedAloha;
  PolicyConfig policy;
  CompressionConfig compression;
  TaskConfig task;
  std::vector<std::uint64_t> seeds{1};
  std::string output;

  std::size_t model_dim() const;
  std::int64_t frame_budget() const;
  ChannelConfig channel_config() const;
  std::size_t slot_capacity() const;
  double learning_rate_at(std::size_t frame) const;
  /// Short policy tag for the metrics CSV, e.g. "aog", "fixed_random_5".
  std::string policy_label() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses the JSON config format documented in the README. Unknown keys and
/// out-of-range values are collected into one ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Every field written out explicitly; parse_config(serialize_config(c)) == c.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace rachfl
