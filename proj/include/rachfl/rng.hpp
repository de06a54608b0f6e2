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
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace rachfl {

/// A reproducible random stream. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; the variate transforms below are written
/// out here because the std:: distributions are implementation-defined.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal (Marsaglia polar method).
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  /// Gamma(shape, 1), Marsaglia-Tsang.
  double gamma(double shape);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Position in the stream-derivation tree. Every random draw in a run comes
/// from a stream opened at a path such as (seed) / frame 12 / user 3 / batch,
/// so results do not depend on evaluation order or thread scheduling.
class StreamKey {
 public:
  explicit StreamKey(std::uint64_t master_seed);

  [[nodiscard]] StreamKey child(std::string_view tag, std::uint64_t index = 0) const;
  [[nodiscard]] Stream open() const;
  [[nodiscard]] std::uint64_t digest() const { return state_; }

  friend bool operator==(const StreamKey&, const StreamKey&) = default;

 private:
  explicit StreamKey(std::uint64_t state, int) : state_(state) {}
  std::uint64_t state_;
};

using StreamLabel = std::pair<std::string_view, std::uint64_t>;

/// Opens the stream at `master_seed / labels[0] / labels[1] / ...`.
/// Throws std::invalid_argument on an empty label path.
Stream rng_stream(std::uint64_t master_seed, std::span<const StreamLabel> labels);

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Draws min(k, n) distinct values from [0, n), in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Stream& rng);

}  // namespace rachfl
