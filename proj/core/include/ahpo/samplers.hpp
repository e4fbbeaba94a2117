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

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ahpo/hpspace.hpp"
#include "ahpo/rng.hpp"
#include "ahpo/trials.hpp"

namespace ahpo::samplers {

enum class SamplerKind { random, grid, tpe };

std::string_view to_string(SamplerKind k);
SamplerKind sampler_kind_from_string(std::string_view s);

struct SamplerSpec {
  SamplerKind kind = SamplerKind::tpe;
  // TPE
  double gamma_fraction = 0.25;
  std::size_t n_candidates = 24;
  double bandwidth_floor = 1e-3;
  std::size_t n_startup = 10;
  /// Weight of the uniform prior component in each Parzen mixture, in units
  /// of one kernel. 0 disables it.
  double prior_weight = 1.0;
  // grid
  std::size_t points_per_dim = 3;
  /// Configurations proposed per ask/tell wave; evaluations inside a wave
  /// may run concurrently.
  std::size_t batch_size = 1;

  /// Throws DomainError.
  void validate() const;

  nlohmann::json to_json() const;
  static SamplerSpec from_json(const nlohmann::json& j);
};

/// Next configuration for `domain` given the round so far. Returns
/// std::nullopt only when a grid sampler has visited every lattice point.
std::optional<hpspace::Configuration> ask(const SamplerSpec& spec,
                                          const hpspace::Subspace& domain,
                                          const trials::RoundHistory& history, Rng& rng);

/// `count` successive proposals against the same history. Grid proposals
/// are distinct; the result is shorter than `count` once the grid runs out.
std::vector<hpspace::Configuration> ask_batch(const SamplerSpec& spec,
                                              const hpspace::Subspace& domain,
                                              const trials::RoundHistory& history,
                                              std::size_t count, Rng& rng);

struct TpeSplit {
  std::vector<const trials::Trial*> good;
  std::vector<const trials::Trial*> bad;
};

/// Ranks ok trials by objective (ties: smaller trial_id first) and puts the
/// top ceil(gamma * n_ok) into `good`. Throws InsufficientDataError when
/// fewer than 2 trials succeeded.
TpeSplit tpe_split(const trials::RoundHistory& history, double gamma_fraction);

/// Univariate Parzen estimator over one encoded dimension.
///
/// Numeric dimensions use Gaussian kernels truncated to [0, 1] with bandwidth
/// max(n^(-1/5) * sd, floor), mixed with an optional uniform prior;
/// categorical dimensions use add-one smoothed category frequencies.
class ParzenEstimator {
 public:
  ParzenEstimator(std::vector<double> points, std::size_t categories, double bandwidth_floor,
                  double prior_weight);

  double log_density(double u) const;
  double sample(Rng& rng) const;
  double bandwidth() const noexcept { return bandwidth_; }

 private:
  std::vector<double> points_;
  std::size_t categories_;
  double bandwidth_ = 0.0;
  double prior_weight_;
  std::vector<double> mass_;         // per-kernel truncation normalizer
  std::vector<double> category_p_;   // smoothed frequencies
};

}  // namespace ahpo::samplers
