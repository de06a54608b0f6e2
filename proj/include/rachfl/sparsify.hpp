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
#include <vector>

#include "rachfl/rng.hpp"
#include "rachfl/types.hpp"

namespace rachfl {

/// Compressed gradient payload: strictly increasing indices below `dim`,
/// each with its value copied verbatim from the source vector.
struct SparseUpdate {
  std::size_t dim = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }

  friend bool operator==(const SparseUpdate&, const SparseUpdate&) = default;
};

enum class Sparsifier : std::uint8_t { TopK, RandK };

/// The min(k, d) largest-magnitude entries of v; equal magnitudes go to the
/// lower index.
SparseUpdate top_k(std::span<const double> v, std::size_t k);

/// min(k, d) entries at uniformly sampled distinct indices. With `rescale`
/// the values are multiplied by d/k (unbiased variant); off by default.
SparseUpdate rand_k(std::span<const double> v, std::size_t k, Stream& rng, bool rescale = false);

/// v with the entries named in s set to zero.
Vector residual(std::span<const double> v, const SparseUpdate& s);

/// target[i] += scale * value for every entry of s.
void scatter_add(std::span<double> target, const SparseUpdate& s, double scale = 1.0);

Vector densify(const SparseUpdate& s);

/// Throws std::invalid_argument if indices are unsorted, duplicated or out of
/// range, or if the index and value arrays differ in length.
void check_sparse(const SparseUpdate& s);

}  // namespace rachfl
