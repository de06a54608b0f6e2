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
#include <optional>
#include <span>
#include <vector>

#include "rachfl/rng.hpp"
#include "rachfl/types.hpp"

namespace rachfl {

enum class TaskKind : std::uint8_t { Regression, Classification };

/// Row-major J x p design matrix plus labels. `row_ids` records the row each
/// sample had in the dataset it was drawn from, so shards can be checked for
/// disjointness.
struct Dataset {
  TaskKind kind = TaskKind::Regression;
  std::size_t num_features = 0;
  int num_classes = 0;  // 0 for regression
  std::vector<double> features;
  std::vector<double> labels;
  std::vector<std::size_t> row_ids;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t j) const {
    return {features.data() + j * num_features, num_features};
  }
  /// Model dimension: p for regression, p*C for classification.
  std::size_t model_dim() const;

  Dataset subset(std::span<const std::size_t> rows) const;
};

struct RegressionData {
  Dataset data;
  Vector w_true;
};

/// Standard-normal features, labels = X w_true + noise * N(0, 1). Rejects
/// num_points < dim.
RegressionData make_regression(std::size_t dim, std::size_t num_points, double noise,
                               std::uint64_t seed);

/// One Gaussian cluster (unit covariance) per class. Cluster means have norm
/// `separation` and are mutually orthogonal when classes <= dim. Classes are
/// balanced (round-robin) before shuffling.
Dataset make_classification(std::size_t dim, int num_classes, std::size_t num_points,
                            double separation, std::uint64_t seed);

/// Splits into `users` disjoint equal-size shards by sampling without
/// replacement. `label_skew` > 0 draws each shard's class mix from a
/// symmetric Dirichlet with that concentration (classification only);
/// 0 keeps iid shards.
std::vector<Dataset> shard(const Dataset& ds, std::size_t users, std::uint64_t seed,
                           double label_skew = 0.0);

/// Mean loss: 0.5 * squared error (regression), softmax cross-entropy
/// (classification). Classification weights are a C x p row-major matrix.
double loss(std::span<const double> w, const Dataset& ds);

/// Gradient of the mean loss over the given rows, summed in the given order.
Vector batch_gradient(std::span<const double> w, const Dataset& ds,
                      std::span<const std::size_t> rows);

Vector full_gradient(std::span<const double> w, const Dataset& ds);

/// Minibatch gradient over `batch_size` rows drawn without replacement.
/// batch_size == ds.size() uses every row in order and draws nothing.
Vector stochastic_gradient(std::span<const double> w, const Dataset& ds, std::size_t batch_size,
                           Stream& rng);

struct Evaluation {
  double loss = 0.0;
  std::optional<double> accuracy;
};

/// Mean loss, plus argmax accuracy for classification (ties to the lower
/// class index).
Evaluation evaluate(std::span<const double> w, const Dataset& test);

/// CSV rows of `features..., label` without a header.
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path, TaskKind kind, int num_classes = 0);

}  // namespace rachfl
