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

#include "rachfl/sparsify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rachfl {
namespace {

SparseUpdate gather(std::span<const double> v, std::vector<std::uint32_t> idx) {
  std::sort(idx.begin(), idx.end());
  SparseUpdate out;
  out.dim = v.size();
  out.values.reserve(idx.size());
  for (auto i : idx) out.values.push_back(v[i]);
  out.indices = std::move(idx);
  return out;
}

void require_indices_fit(std::size_t dim, const SparseUpdate& s, const char* what) {
  require_same_dim(dim, s.dim, what);
  if (s.indices.size() != s.values.size())
    throw std::invalid_argument(std::string(what) + ": index/value length mismatch");
  for (auto i : s.indices)
    if (i >= dim) throw std::invalid_argument(std::string(what) + ": index out of range");
}

}  // namespace

SparseUpdate top_k(std::span<const double> v, std::size_t k) {
  const std::size_t d = v.size();
  std::vector<std::uint32_t> idx(d);
  std::iota(idx.begin(), idx.end(), 0u);
  if (k < d) {
    auto larger = [&v](std::uint32_t a, std::uint32_t b) {
      const double ma = std::abs(v[a]);
      const double mb = std::abs(v[b]);
      return ma > mb || (ma == mb && a < b);
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), larger);
    idx.resize(k);
  }
  return gather(v, std::move(idx));
}

SparseUpdate rand_k(std::span<const double> v, std::size_t k, Stream& rng, bool rescale) {
  const std::size_t d = v.size();
  std::vector<std::uint32_t> idx;
  if (k >= d) {
    idx.resize(d);
    std::iota(idx.begin(), idx.end(), 0u);
  } else {
    for (auto i : sample_without_replacement(d, k, rng)) idx.push_back(static_cast<std::uint32_t>(i));
  }
  auto out = gather(v, std::move(idx));
  if (rescale && k < d) {
    const double scale = static_cast<double>(d) / static_cast<double>(k);
    for (auto& x : out.values) x *= scale;
  }
  return out;
}

Vector residual(std::span<const double> v, const SparseUpdate& s) {
  require_indices_fit(v.size(), s, "residual");
  Vector out(v.begin(), v.end());
  for (auto i : s.indices) out[i] = 0.0;
  return out;
}

void scatter_add(std::span<double> target, const SparseUpdate& s, double scale) {
  require_indices_fit(target.size(), s, "scatter_add");
  for (std::size_t j = 0; j < s.indices.size(); ++j) target[s.indices[j]] += scale * s.values[j];
}

Vector densify(const SparseUpdate& s) {
  Vector out(s.dim, 0.0);
  require_indices_fit(s.dim, s, "densify");
  for (std::size_t j = 0; j < s.indices.size(); ++j) out[s.indices[j]] = s.values[j];
  return out;
}

void check_sparse(const SparseUpdate& s) {
  require_indices_fit(s.dim, s, "check_sparse");
  for (std::size_t j = 1; j < s.indices.size(); ++j)
    if (s.indices[j - 1] >= s.indices[j])
      throw std::invalid_argument("check_sparse: indices must be strictly increasing");
}

}  // namespace rachfl
