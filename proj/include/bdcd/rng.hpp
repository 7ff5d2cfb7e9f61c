// Copyright 2026 The bdcd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BDCD_RNG_HPP_
#define BDCD_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bdcd {

/// Deterministic random source used everywhere randomness enters training.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are not, so the conversions to
/// uniform reals, normals and bounded integers are done here and are
/// reproducible across standard library implementations.
///
/// An Rng is single-owner mutable state; do not share one across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// True with probability p.
  bool bernoulli(double p) { return uniform() < p; }

  /// Derives an independent seed from a base seed and a list of stream
  /// coordinates (e.g. epoch and image index) by splitmix64 mixing.
  static std::uint64_t derive_seed(std::uint64_t base,
                                   std::initializer_list<std::uint64_t> coords);

  static Rng derive(std::uint64_t base,
                    std::initializer_list<std::uint64_t> coords) {
    return Rng(derive_seed(base, coords));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace bdcd

#endif  // BDCD_RNG_HPP_
