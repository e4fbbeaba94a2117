// Copyright 2026 The adaptive-hpo Authors
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

#pragma once

#include <cstdint>
#include <string_view>

namespace ahpo {

/// Counter-based random source.
///
/// The stream is fully determined by a 64-bit key; output i is
/// mix(key + (i + 1) * golden), i.e. SplitMix64 run as a counter. Keys are
/// derived from (master seed, purpose tag, index...) so every consumer owns an
/// independent stream and evaluation order cannot perturb results. All
/// derived floating-point draws use only IEEE arithmetic plus std::log /
/// std::sqrt / std::cos, so sequences are reproducible across runs.
class Rng {
 public:
  explicit Rng(std::uint64_t key = 0) noexcept : key_(key) {}

  /// Stream for `(seed, tag, a, b)`.
  static Rng derive(std::uint64_t seed, std::string_view tag, std::uint64_t a = 0,
                    std::uint64_t b = 0) noexcept;

  /// Child stream of this one; does not advance the parent.
  Rng split(std::string_view tag, std::uint64_t index = 0) const noexcept;

  std::uint64_t next_u64() noexcept;

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal() noexcept;

  bool bernoulli(double p) noexcept { return uniform() < p; }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// FNV-1a over the bytes of `s`.
std::uint64_t hash_tag(std::string_view s) noexcept;

}  // namespace ahpo
