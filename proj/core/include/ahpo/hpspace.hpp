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

// Hyperparameter search spaces.
//
// Every parameter maps onto the unit interval: linear and log-scaled
// continuous parameters map affinely (in value or log-value), while integer
// and categorical parameters are split into equal-width bins and encode to the
// bin midpoint. Samplers and the fANOVA forest both operate on these encoded
// coordinates, so a uniform measure on [0,1]^d is the reference measure
// everywhere.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ahpo/rng.hpp"

namespace ahpo::hpspace {

enum class ParamKind { continuous_linear, continuous_log, integer, categorical };

std::string_view to_string(ParamKind kind);
ParamKind param_kind_from_string(std::string_view s);

/// double for continuous kinds, int64 for integer, label for categorical.
using ParamValue = std::variant<double, std::int64_t, std::string>;

std::string format_value(const ParamValue& v);

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::continuous_linear;
  double lower = 0.0;
  double upper = 1.0;
  std::vector<std::string> choices;
  ParamValue default_value = 0.0;

  static ParamSpec linear(std::string name, double lower, double upper, double def);
  static ParamSpec log(std::string name, double lower, double upper, double def);
  static ParamSpec integer(std::string name, std::int64_t lower, std::int64_t upper,
                           std::int64_t def);
  static ParamSpec categorical(std::string name, std::vector<std::string> choices,
                               std::string def);

  /// Throws DomainError if the spec itself is malformed.
  void validate() const;

  bool contains(const ParamValue& v) const noexcept;

  /// Throws DomainError naming the parameter if `v` is outside the domain.
  void check(const ParamValue& v) const;

  double encode(const ParamValue& v) const;
  ParamValue decode(double u) const;

  /// Number of bins for integer/categorical kinds, 0 for continuous ones.
  std::size_t cardinality() const noexcept;

  /// Parses the textual form written by format_value.
  ParamValue parse(std::string_view text) const;

  bool operator==(const ParamSpec&) const = default;
};

/// Concrete assignment of values to parameter names.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::map<std::string, ParamValue> values)
      : values_(std::move(values)) {}

  const ParamValue& at(const std::string& name) const;
  void set(const std::string& name, ParamValue v) { values_[name] = std::move(v); }
  bool has(const std::string& name) const { return values_.count(name) != 0; }

  /// Numeric value of a continuous or integer parameter.
  double number(const std::string& name) const;
  std::int64_t integer(const std::string& name) const;
  const std::string& label(const std::string& name) const;

  const std::map<std::string, ParamValue>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  bool operator==(const Configuration&) const = default;

 private:
  std::map<std::string, ParamValue> values_;
};

class ConfigSpace {
 public:
  ConfigSpace() = default;
  /// Validates every spec and name uniqueness; throws DomainError.
  explicit ConfigSpace(std::vector<ParamSpec> params);

  std::size_t dim() const noexcept { return params_.size(); }
  const std::vector<ParamSpec>& params() const noexcept { return params_; }
  const ParamSpec& param(std::size_t i) const { return params_.at(i); }
  const ParamSpec& param(const std::string& name) const;
  std::optional<std::size_t> index_of(std::string_view name) const noexcept;
  std::vector<std::string> names() const;

  Configuration default_configuration() const;

  /// Throws DomainError on a missing, extra or out-of-domain value.
  void validate(const Configuration& config) const;
  bool contains(const Configuration& config) const noexcept;

  std::vector<double> encode(const Configuration& config) const;
  Configuration decode(std::span<const double> unit) const;

  nlohmann::json to_json() const;
  static ConfigSpace from_json(const nlohmann::json& j);

  bool operator==(const ConfigSpace&) const = default;

 private:
  std::vector<ParamSpec> params_;
};

/// A search domain: a base space with only `free` parameters searchable and
/// every other parameter pinned to the anchor value. The full space is the
/// subspace whose free set is every parameter.
class Subspace {
 public:
  Subspace() = default;
  Subspace(ConfigSpace base, const std::vector<std::string>& free, Configuration anchor);

  /// Every parameter free; anchor is the default configuration.
  static Subspace full(ConfigSpace base);

  const ConfigSpace& base() const noexcept { return base_; }
  const Configuration& anchor() const noexcept { return anchor_; }
  /// Indices into base().params(), in declaration order.
  const std::vector<std::size_t>& free_indices() const noexcept { return free_; }
  std::vector<std::string> free_names() const;
  std::size_t free_dim() const noexcept { return free_.size(); }
  bool is_full() const noexcept { return free_.size() == base_.dim(); }
  bool is_free(std::string_view name) const noexcept;

  /// Valid in the base space and equal to the anchor off the free set.
  bool contains(const Configuration& config) const noexcept;

  /// Configuration from encoded coordinates of the free parameters.
  Configuration compose(std::span<const double> free_unit) const;
  std::vector<double> encode_free(const Configuration& config) const;
  /// Replaces non-free values of `config` with the anchor values.
  Configuration project(const Configuration& config) const;

  nlohmann::json to_json() const;
  static Subspace from_json(const nlohmann::json& j);

  bool operator==(const Subspace&) const = default;

 private:
  ConfigSpace base_;
  std::vector<std::size_t> free_;
  Configuration anchor_;
};

/// One independent uniform draw per parameter (log-uniform for log kinds),
/// in declaration order.
Configuration sample_uniform(const ConfigSpace& space, Rng& rng);
/// Draws only the free parameters, in declaration order.
Configuration sample_uniform(const Subspace& subspace, Rng& rng);

struct Restriction {
  Subspace subspace;
  std::vector<std::string> warnings;
};

/// Keeps the `k` parameters with the largest importance free (ties broken
/// by declaration order) and pins the rest to `anchor`. k > dim is clamped
/// with a warning.
Restriction restrict_top_k(const ConfigSpace& space,
                           const std::map<std::string, double>& importance, std::size_t k,
                           const Configuration& anchor);

/// Smallest k whose top-k importance mass reaches `mass` (at least 1).
std::size_t k_for_importance_mass(const ConfigSpace& space,
                                  const std::map<std::string, double>& importance,
                                  double mass);

}  // namespace ahpo::hpspace
