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

#include "rachfl/task.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rachfl {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_model(std::span<const double> w, const Dataset& ds, const char* what) {
  require_same_dim(w.size(), ds.model_dim(), what);
}

int label_class(const Dataset& ds, std::size_t j) { return static_cast<int>(ds.labels[j]); }

/// Log-softmax of the C logits of row j, written into `out`.
void log_softmax(std::span<const double> w, const Dataset& ds, std::size_t j, std::vector<double>& out) {
  const std::size_t p = ds.num_features;
  const auto x = ds.row(j);
  out.resize(static_cast<std::size_t>(ds.num_classes));
  double top = -INFINITY;
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = dot(w.subspan(c * p, p), x);
    top = std::max(top, out[c]);
  }
  double z = 0.0;
  for (double v : out) z += std::exp(v - top);
  const double lse = top + std::log(z);
  for (double& v : out) v -= lse;
}

double row_loss(std::span<const double> w, const Dataset& ds, std::size_t j, std::vector<double>& scratch) {
  if (ds.kind == TaskKind::Regression) {
    const double r = dot(w, ds.row(j)) - ds.labels[j];
    return 0.5 * r * r;
  }
  log_softmax(w, ds, j, scratch);
  return -scratch[static_cast<std::size_t>(label_class(ds, j))];
}

void add_row_gradient(std::span<const double> w, const Dataset& ds, std::size_t j, std::span<double> g,
                      std::vector<double>& scratch) {
  const auto x = ds.row(j);
  const std::size_t p = ds.num_features;
  if (ds.kind == TaskKind::Regression) {
    const double r = dot(w, x) - ds.labels[j];
    for (std::size_t i = 0; i < p; ++i) g[i] += r * x[i];
    return;
  }
  log_softmax(w, ds, j, scratch);
  const int y = label_class(ds, j);
  for (std::size_t c = 0; c < scratch.size(); ++c) {
    const double coef = std::exp(scratch[c]) - (static_cast<int>(c) == y ? 1.0 : 0.0);
    auto gc = g.subspan(c * p, p);
    for (std::size_t i = 0; i < p; ++i) gc[i] += coef * x[i];
  }
}

/// Orthogonal directions of norm `scale` (Gram-Schmidt) when count <= dim,
/// independent random directions otherwise.
std::vector<Vector> cluster_means(std::size_t dim, int count, double scale, Stream& rng) {
  std::vector<Vector> means;
  for (int c = 0; c < count; ++c) {
    Vector v(dim);
    double n = 0.0;
    while (n < 1e-8) {
      for (auto& x : v) x = rng.normal();
      if (static_cast<std::size_t>(c) < dim)
        for (const auto& prev : means) {
          const double proj = dot(v, prev) / dot(prev, prev);
          for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * prev[i];
        }
      n = norm2(v);
    }
    for (auto& x : v) x *= scale / n;
    means.push_back(std::move(v));
  }
  return means;
}

}  // namespace

std::size_t Dataset::model_dim() const {
  return kind == TaskKind::Regression ? num_features
                                      : num_features * static_cast<std::size_t>(num_classes);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.kind = kind;
  out.num_features = num_features;
  out.num_classes = num_classes;
  out.features.reserve(rows.size() * num_features);
  out.labels.reserve(rows.size());
  out.row_ids.reserve(rows.size());
  for (auto j : rows) {
    if (j >= size()) throw std::out_of_range("Dataset::subset: row out of range");
    const auto x = row(j);
    out.features.insert(out.features.end(), x.begin(), x.end());
    out.labels.push_back(labels[j]);
    out.row_ids.push_back(row_ids[j]);
  }
  return out;
}

RegressionData make_regression(std::size_t dim, std::size_t num_points, double noise, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("make_regression: dim must be >= 1");
  if (num_points < dim)
    throw std::invalid_argument("make_regression: num_points must be >= dim");
  if (!(noise >= 0.0)) throw std::invalid_argument("make_regression: noise must be >= 0");

  Stream rng = StreamKey(seed).child("regression").open();
  RegressionData out;
  out.w_true.resize(dim);
  for (auto& x : out.w_true) x = rng.normal();

  Dataset& ds = out.data;
  ds.kind = TaskKind::Regression;
  ds.num_features = dim;
  ds.features.resize(dim * num_points);
  ds.labels.resize(num_points);
  ds.row_ids.resize(num_points);
  for (std::size_t j = 0; j < num_points; ++j) {
    std::span<double> x(ds.features.data() + j * dim, dim);
    for (auto& v : x) v = rng.normal();
    ds.labels[j] = dot(x, out.w_true) + noise * rng.normal();
    ds.row_ids[j] = j;
  }
  return out;
}

Dataset make_classification(std::size_t dim, int num_classes, std::size_t num_points, double separation,
                            std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("make_classification: dim must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("make_classification: need at least 2 classes");
  if (num_points < 1) throw std::invalid_argument("make_classification: num_points must be >= 1");
  if (!(separation >= 0.0)) throw std::invalid_argument("make_classification: separation must be >= 0");

  Stream rng = StreamKey(seed).child("classification").open();
  const auto means = cluster_means(dim, num_classes, separation, rng);

  std::vector<int> label(num_points);
  for (std::size_t j = 0; j < num_points; ++j) label[j] = static_cast<int>(j % num_classes);
  for (std::size_t j = num_points; j > 1; --j) std::swap(label[j - 1], label[rng.below(j)]);

  Dataset ds;
  ds.kind = TaskKind::Classification;
  ds.num_features = dim;
  ds.num_classes = num_classes;
  ds.features.resize(dim * num_points);
  ds.labels.resize(num_points);
  ds.row_ids.resize(num_points);
  for (std::size_t j = 0; j < num_points; ++j) {
    const auto& mu = means[static_cast<std::size_t>(label[j])];
    for (std::size_t i = 0; i < dim; ++i) ds.features[j * dim + i] = mu[i] + rng.normal();
    ds.labels[j] = label[j];
    ds.row_ids[j] = j;
  }
  return ds;
}

std::vector<Dataset> shard(const Dataset& ds, std::size_t users, std::uint64_t seed, double label_skew) {
  if (users < 1) throw std::invalid_argument("shard: need at least one user");
  if (ds.size() % users != 0)
    throw std::invalid_argument("shard: " + std::to_string(ds.size()) + " points do not split evenly over " +
                                std::to_string(users) + " users");
  if (label_skew < 0.0) throw std::invalid_argument("shard: label_skew must be >= 0");
  const std::size_t per = ds.size() / users;
  Stream rng = StreamKey(seed).child("shard").open();

  std::vector<std::vector<std::size_t>> rows(users);
  if (label_skew == 0.0 || ds.kind != TaskKind::Classification) {
    const auto perm = sample_without_replacement(ds.size(), ds.size(), rng);
    for (std::size_t u = 0; u < users; ++u)
      rows[u].assign(perm.begin() + static_cast<std::ptrdiff_t>(u * per),
                     perm.begin() + static_cast<std::ptrdiff_t>((u + 1) * per));
  } else {
    const auto C = static_cast<std::size_t>(ds.num_classes);
    std::vector<std::vector<std::size_t>> pool(C);
    for (auto j : sample_without_replacement(ds.size(), ds.size(), rng))
      pool[static_cast<std::size_t>(label_class(ds, j))].push_back(j);

    for (std::size_t u = 0; u < users; ++u) {
      std::vector<double> mix(C);
      double total = 0.0;
      for (auto& x : mix) total += (x = rng.gamma(label_skew));
      // Largest-remainder allocation of `per` rows over classes.
      std::vector<std::size_t> want(C);
      std::vector<std::pair<double, std::size_t>> rem;
      std::size_t assigned = 0;
      for (std::size_t c = 0; c < C; ++c) {
        const double exact = total > 0.0 ? mix[c] / total * static_cast<double>(per) : 0.0;
        want[c] = static_cast<std::size_t>(std::floor(exact));
        assigned += want[c];
        rem.emplace_back(-(exact - std::floor(exact)), c);
      }
      std::sort(rem.begin(), rem.end());
      for (std::size_t i = 0; assigned < per; ++i, ++assigned) ++want[rem[i % C].second];

      std::size_t missing = 0;
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t take = std::min(want[c], pool[c].size());
        rows[u].insert(rows[u].end(), pool[c].end() - static_cast<std::ptrdiff_t>(take), pool[c].end());
        pool[c].resize(pool[c].size() - take);
        missing += want[c] - take;
      }
      // Short pools are topped up from whichever classes have most rows left.
      while (missing > 0) {
        auto fullest = std::max_element(pool.begin(), pool.end(),
                                        [](const auto& a, const auto& b) { return a.size() < b.size(); });
        rows[u].push_back(fullest->back());
        fullest->pop_back();
        --missing;
      }
    }
  }

  std::vector<Dataset> out;
  out.reserve(users);
  for (auto& r : rows) out.push_back(ds.subset(r));
  return out;
}

double loss(std::span<const double> w, const Dataset& ds) {
  check_model(w, ds, "loss");
  if (ds.size() == 0) throw std::invalid_argument("loss: empty dataset");
  std::vector<double> scratch;
  double total = 0.0;
  for (std::size_t j = 0; j < ds.size(); ++j) total += row_loss(w, ds, j, scratch);
  return total / static_cast<double>(ds.size());
}

Vector batch_gradient(std::span<const double> w, const Dataset& ds, std::span<const std::size_t> rows) {
  check_model(w, ds, "batch_gradient");
  if (rows.empty()) throw std::invalid_argument("batch_gradient: empty batch");
  Vector g(w.size(), 0.0);
  std::vector<double> scratch;
  for (auto j : rows) add_row_gradient(w, ds, j, g, scratch);
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (auto& x : g) x *= inv;
  return g;
}

Vector full_gradient(std::span<const double> w, const Dataset& ds) {
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return batch_gradient(w, ds, rows);
}

Vector stochastic_gradient(std::span<const double> w, const Dataset& ds, std::size_t batch_size, Stream& rng) {
  if (batch_size < 1 || batch_size > ds.size())
    throw std::invalid_argument("stochastic_gradient: batch size " + std::to_string(batch_size) +
                                " outside [1, " + std::to_string(ds.size()) + "]");
  if (batch_size == ds.size()) return full_gradient(w, ds);
  auto rows = sample_without_replacement(ds.size(), batch_size, rng);
  std::sort(rows.begin(), rows.end());
  return batch_gradient(w, ds, rows);
}

Evaluation evaluate(std::span<const double> w, const Dataset& test) {
  Evaluation out;
  out.loss = loss(w, test);
  if (test.kind == TaskKind::Classification) {
    const std::size_t p = test.num_features;
    std::size_t correct = 0;
    for (std::size_t j = 0; j < test.size(); ++j) {
      int best = 0;
      double best_score = -INFINITY;
      for (int c = 0; c < test.num_classes; ++c) {
        const double s = dot(w.subspan(static_cast<std::size_t>(c) * p, p), test.row(j));
        if (s > best_score) {
          best_score = s;
          best = c;
        }
      }
      if (best == label_class(test, j)) ++correct;
    }
    out.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  }
  return out;
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  char buf[32];
  for (std::size_t j = 0; j < ds.size(); ++j) {
    for (double x : ds.row(j)) {
      std::snprintf(buf, sizeof buf, "%.17g,", x);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", ds.labels[j]);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Dataset read_dataset_csv(const std::filesystem::path& path, TaskKind kind, int num_classes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Dataset ds;
  ds.kind = kind;
  ds.num_classes = kind == TaskKind::Classification ? num_classes : 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
    if (cells.size() < 2)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": need features and a label");
    if (ds.num_features == 0) ds.num_features = cells.size() - 1;
    if (cells.size() != ds.num_features + 1)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    ds.labels.push_back(cells.back());
    cells.pop_back();
    ds.features.insert(ds.features.end(), cells.begin(), cells.end());
    ds.row_ids.push_back(ds.row_ids.size());
  }
  if (kind == TaskKind::Classification)
    for (double y : ds.labels)
      if (y < 0 || y >= num_classes || y != std::floor(y))
        throw std::runtime_error(path.string() + ": label outside [0, " + std::to_string(num_classes) + ")");
  return ds;
}

}  // namespace rachfl
