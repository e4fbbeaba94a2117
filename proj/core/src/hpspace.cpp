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

#include "ahpo/hpspace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "ahpo/error.hpp"
#include "ahpo/format.hpp"

namespace ahpo::hpspace {

namespace {

bool is_whole(double x) { return std::isfinite(x) && std::floor(x) == x; }

double clamp01(double u) { return std::clamp(u, 0.0, 1.0); }

std::size_t bin_of(double u, std::size_t n) {
  const auto idx = static_cast<std::size_t>(std::floor(clamp01(u) * static_cast<double>(n)));
  return std::min(idx, n - 1);
}

}  // namespace

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::continuous_linear: return "continuous-linear";
    case ParamKind::continuous_log: return "continuous-log";
    case ParamKind::integer: return "integer";
    case ParamKind::categorical: return "categorical";
  }
  return "?";
}

ParamKind param_kind_from_string(std::string_view s) {
  if (s == "continuous-linear") return ParamKind::continuous_linear;
  if (s == "continuous-log") return ParamKind::continuous_log;
  if (s == "integer") return ParamKind::integer;
  if (s == "categorical") return ParamKind::categorical;
  throw DomainError("unknown parameter kind '" + std::string(s) + "'");
}

std::string format_value(const ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

// --- ParamSpec ---------------------------------------------------------------

ParamSpec ParamSpec::linear(std::string name, double lower, double upper, double def) {
  ParamSpec p{std::move(name), ParamKind::continuous_linear, lower, upper, {}, def};
  p.validate();
  return p;
}

ParamSpec ParamSpec::log(std::string name, double lower, double upper, double def) {
  ParamSpec p{std::move(name), ParamKind::continuous_log, lower, upper, {}, def};
  p.validate();
  return p;
}

ParamSpec ParamSpec::integer(std::string name, std::int64_t lower, std::int64_t upper,
                             std::int64_t def) {
  ParamSpec p{std::move(name), ParamKind::integer, static_cast<double>(lower),
              static_cast<double>(upper), {}, def};
  p.validate();
  return p;
}

ParamSpec ParamSpec::categorical(std::string name, std::vector<std::string> choices,
                                 std::string def) {
  ParamSpec p{std::move(name), ParamKind::categorical, 0.0, 0.0, std::move(choices),
              std::move(def)};
  p.validate();
  return p;
}

void ParamSpec::validate() const {
  if (name.empty()) throw DomainError("parameter name must be nonempty");
  if (name.find_first_of(",\n\r\"") != std::string::npos) {
    throw DomainError("parameter '" + name + "': name contains a reserved character");
  }
  switch (kind) {
    case ParamKind::continuous_linear:
    case ParamKind::continuous_log:
      if (!std::isfinite(lower) || !std::isfinite(upper) || !(upper > lower)) {
        throw DomainError("parameter '" + name + "': requires finite bounds with upper > lower");
      }
      if (kind == ParamKind::continuous_log && !(lower > 0.0)) {
        throw DomainError("parameter '" + name + "': log scale requires lower > 0");
      }
      break;
    case ParamKind::integer:
      // A single-point integer domain [a, a] is allowed.
      if (!is_whole(lower) || !is_whole(upper) || upper < lower) {
        throw DomainError("parameter '" + name + "': integer bounds must be whole, upper >= lower");
      }
      break;
    case ParamKind::categorical: {
      if (choices.size() < 2) {
        throw DomainError("parameter '" + name + "': categorical needs at least 2 choices");
      }
      std::set<std::string> seen;
      for (const auto& c : choices) {
        if (c.empty() || c.find_first_of(",\n\r\"") != std::string::npos) {
          throw DomainError("parameter '" + name + "': invalid choice label '" + c + "'");
        }
        if (!seen.insert(c).second) {
          throw DomainError("parameter '" + name + "': duplicate choice '" + c + "'");
        }
      }
      break;
    }
  }
  if (!contains(default_value)) {
    throw DomainError("parameter '" + name + "': default value " + format_value(default_value) +
                      " outside domain");
  }
}

bool ParamSpec::contains(const ParamValue& v) const noexcept {
  switch (kind) {
    case ParamKind::continuous_linear:
    case ParamKind::continuous_log: {
      const auto* d = std::get_if<double>(&v);
      return d != nullptr && *d >= lower && *d <= upper;
    }
    case ParamKind::integer: {
      const auto* i = std::get_if<std::int64_t>(&v);
      return i != nullptr && static_cast<double>(*i) >= lower &&
             static_cast<double>(*i) <= upper;
    }
    case ParamKind::categorical: {
      const auto* s = std::get_if<std::string>(&v);
      return s != nullptr && std::find(choices.begin(), choices.end(), *s) != choices.end();
    }
  }
  return false;
}

void ParamSpec::check(const ParamValue& v) const {
  if (!contains(v)) {
    throw DomainError("parameter '" + name + "': value " + format_value(v) +
                      " outside domain");
  }
}

std::size_t ParamSpec::cardinality() const noexcept {
  switch (kind) {
    case ParamKind::integer: return static_cast<std::size_t>(upper - lower) + 1;
    case ParamKind::categorical: return choices.size();
    default: return 0;
  }
}

double ParamSpec::encode(const ParamValue& v) const {
  check(v);
  switch (kind) {
    case ParamKind::continuous_linear:
      return (std::get<double>(v) - lower) / (upper - lower);
    case ParamKind::continuous_log:
      return (std::log(std::get<double>(v)) - std::log(lower)) /
             (std::log(upper) - std::log(lower));
    case ParamKind::integer:
      return (static_cast<double>(std::get<std::int64_t>(v)) - lower + 0.5) /
             static_cast<double>(cardinality());
    case ParamKind::categorical: {
      const auto it = std::find(choices.begin(), choices.end(), std::get<std::string>(v));
      const auto idx = static_cast<double>(it - choices.begin());
      return (idx + 0.5) / static_cast<double>(choices.size());
    }
  }
  return 0.0;
}

ParamValue ParamSpec::decode(double u) const {
  u = clamp01(u);
  switch (kind) {
    case ParamKind::continuous_linear:
      return std::clamp(lower + u * (upper - lower), lower, upper);
    case ParamKind::continuous_log: {
      const double ll = std::log(lower);
      return std::clamp(std::exp(ll + u * (std::log(upper) - ll)), lower, upper);
    }
    case ParamKind::integer:
      return static_cast<std::int64_t>(lower) +
             static_cast<std::int64_t>(bin_of(u, cardinality()));
    case ParamKind::categorical:
      return choices[bin_of(u, choices.size())];
  }
  return 0.0;
}

ParamValue ParamSpec::parse(std::string_view text) const {
  switch (kind) {
    case ParamKind::continuous_linear:
    case ParamKind::continuous_log: {
      const auto d = parse_double(text);
      if (!d) throw ParseError("parameter '" + name + "': bad real '" + std::string(text) + "'");
      return *d;
    }
    case ParamKind::integer: {
      std::int64_t i = 0;
      const auto* end = text.data() + text.size();
      const auto [ptr, ec] = std::from_chars(text.data(), end, i);
      if (ec != std::errc() || ptr != end) {
        throw ParseError("parameter '" + name + "': bad integer '" + std::string(text) + "'");
      }
      return i;
    }
    case ParamKind::categorical:
      return std::string(text);
  }
  return 0.0;
}

// --- Configuration -----------------------------------------------------------

const ParamValue& Configuration::at(const std::string& name) const {
  const auto it = values_.find(name);
  if (it == values_.end()) throw DomainError("configuration has no parameter '" + name + "'");
  return it->second;
}

double Configuration::number(const std::string& name) const {
  const auto& v = at(name);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw DomainError("parameter '" + name + "' is categorical, not numeric");
}

std::int64_t Configuration::integer(const std::string& name) const {
  const auto& v = at(name);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  throw DomainError("parameter '" + name + "' is not an integer");
}

const std::string& Configuration::label(const std::string& name) const {
  const auto& v = at(name);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw DomainError("parameter '" + name + "' is not categorical");
}

// --- ConfigSpace -------------------------------------------------------------

ConfigSpace::ConfigSpace(std::vector<ParamSpec> params) : params_(std::move(params)) {
  if (params_.empty()) throw DomainError("configuration space needs at least one parameter");
  std::set<std::string> seen;
  for (const auto& p : params_) {
    p.validate();
    if (!seen.insert(p.name).second) {
      throw DomainError("duplicate parameter name '" + p.name + "'");
    }
  }
}

const ParamSpec& ConfigSpace::param(const std::string& name) const {
  const auto idx = index_of(name);
  if (!idx) throw DomainError("space has no parameter '" + name + "'");
  return params_[*idx];
}

std::optional<std::size_t> ConfigSpace::index_of(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> ConfigSpace::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.name);
  return out;
}

Configuration ConfigSpace::default_configuration() const {
  Configuration c;
  for (const auto& p : params_) c.set(p.name, p.default_value);
  return c;
}

void ConfigSpace::validate(const Configuration& config) const {
  for (const auto& p : params_) {
    if (!config.has(p.name)) throw DomainError("parameter '" + p.name + "': missing value");
    p.check(config.at(p.name));
  }
  if (config.size() != params_.size()) {
    for (const auto& [name, _] : config.values()) {
      if (!index_of(name)) throw DomainError("parameter '" + name + "': not in space");
    }
  }
}

bool ConfigSpace::contains(const Configuration& config) const noexcept {
  if (config.size() != params_.size()) return false;
  for (const auto& p : params_) {
    const auto it = config.values().find(p.name);
    if (it == config.values().end() || !p.contains(it->second)) return false;
  }
  return true;
}

std::vector<double> ConfigSpace::encode(const Configuration& config) const {
  validate(config);
  std::vector<double> out(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out[i] = params_[i].encode(config.at(params_[i].name));
  }
  return out;
}

Configuration ConfigSpace::decode(std::span<const double> unit) const {
  if (unit.size() != params_.size()) throw DomainError("decode: dimension mismatch");
  Configuration c;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    c.set(params_[i].name, params_[i].decode(unit[i]));
  }
  return c;
}

namespace {

nlohmann::json value_to_json(const ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return std::get<std::string>(v);
}

ParamValue value_from_json(const ParamSpec& p, const nlohmann::json& j) {
  switch (p.kind) {
    case ParamKind::continuous_linear:
    case ParamKind::continuous_log:
      if (!j.is_number()) throw DomainError("parameter '" + p.name + "': expected a number");
      return j.get<double>();
    case ParamKind::integer:
      if (j.is_number_integer()) return j.get<std::int64_t>();
      if (j.is_number_float() && is_whole(j.get<double>())) {
        return static_cast<std::int64_t>(j.get<double>());
      }
      throw DomainError("parameter '" + p.name + "': expected an integer");
    case ParamKind::categorical:
      if (!j.is_string()) throw DomainError("parameter '" + p.name + "': expected a label");
      return j.get<std::string>();
  }
  return 0.0;
}

nlohmann::json config_to_json(const Configuration& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, v] : c.values()) j[name] = value_to_json(v);
  return j;
}

Configuration config_from_json(const ConfigSpace& space, const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("configuration must be a JSON object");
  Configuration c;
  for (const auto& [name, v] : j.items()) c.set(name, value_from_json(space.param(name), v));
  space.validate(c);
  return c;
}

}  // namespace

nlohmann::json ConfigSpace::to_json() const {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : params_) {
    nlohmann::json jp;
    jp["name"] = p.name;
    jp["kind"] = std::string(to_string(p.kind));
    if (p.kind == ParamKind::categorical) {
      jp["lower"] = nullptr;
      jp["upper"] = nullptr;
      jp["choices"] = p.choices;
    } else if (p.kind == ParamKind::integer) {
      jp["lower"] = static_cast<std::int64_t>(p.lower);
      jp["upper"] = static_cast<std::int64_t>(p.upper);
      jp["choices"] = nlohmann::json::array();
    } else {
      jp["lower"] = p.lower;
      jp["upper"] = p.upper;
      jp["choices"] = nlohmann::json::array();
    }
    jp["default"] = value_to_json(p.default_value);
    params.push_back(std::move(jp));
  }
  return nlohmann::json{{"params", std::move(params)}};
}

ConfigSpace ConfigSpace::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("params") || !j["params"].is_array()) {
    throw DomainError("space JSON must be an object with a 'params' array");
  }
  std::vector<ParamSpec> params;
  for (const auto& jp : j["params"]) {
    ParamSpec p;
    if (!jp.contains("name") || !jp["name"].is_string()) {
      throw DomainError("space JSON: every parameter needs a string 'name'");
    }
    p.name = jp["name"].get<std::string>();
    if (!jp.contains("kind") || !jp["kind"].is_string()) {
      throw DomainError("parameter '" + p.name + "': missing 'kind'");
    }
    p.kind = param_kind_from_string(jp["kind"].get<std::string>());
    if (p.kind == ParamKind::categorical) {
      if (!jp.contains("choices") || !jp["choices"].is_array()) {
        throw DomainError("parameter '" + p.name + "': missing 'choices'");
      }
      p.choices = jp["choices"].get<std::vector<std::string>>();
      p.lower = p.upper = 0.0;
    } else {
      for (const char* key : {"lower", "upper"}) {
        if (!jp.contains(key) || !jp[key].is_number()) {
          throw DomainError("parameter '" + p.name + "': missing numeric '" + key + "'");
        }
      }
      p.lower = jp["lower"].get<double>();
      p.upper = jp["upper"].get<double>();
    }
    if (jp.contains("default") && !jp["default"].is_null()) {
      p.default_value = value_from_json(p, jp["default"]);
    } else {
      // Missing default: lower bound, or first choice.
      switch (p.kind) {
        case ParamKind::categorical:
          p.default_value = p.choices.empty() ? std::string() : p.choices.front();
          break;
        case ParamKind::integer:
          p.default_value = static_cast<std::int64_t>(p.lower);
          break;
        default:
          p.default_value = p.lower;
      }
    }
    params.push_back(std::move(p));
  }
  return ConfigSpace(std::move(params));
}

// --- Subspace ----------------------------------------------------------------

Subspace::Subspace(ConfigSpace base, const std::vector<std::string>& free, Configuration anchor)
    : base_(std::move(base)), anchor_(std::move(anchor)) {
  if (free.empty()) throw DomainError("subspace needs at least one free parameter");
  base_.validate(anchor_);
  std::set<std::size_t> idx;
  for (const auto& name : free) {
    const auto i = base_.index_of(name);
    if (!i) throw DomainError("subspace: free parameter '" + name + "' not in base space");
    idx.insert(*i);
  }
  free_.assign(idx.begin(), idx.end());
}

Subspace Subspace::full(ConfigSpace base) {
  auto names = base.names();
  auto anchor = base.default_configuration();
  return Subspace(std::move(base), names, std::move(anchor));
}

std::vector<std::string> Subspace::free_names() const {
  std::vector<std::string> out;
  out.reserve(free_.size());
  for (auto i : free_) out.push_back(base_.param(i).name);
  return out;
}

bool Subspace::is_free(std::string_view name) const noexcept {
  const auto i = base_.index_of(name);
  return i && std::binary_search(free_.begin(), free_.end(), *i);
}

bool Subspace::contains(const Configuration& config) const noexcept {
  if (!base_.contains(config)) return false;
  for (std::size_t i = 0; i < base_.dim(); ++i) {
    if (std::binary_search(free_.begin(), free_.end(), i)) continue;
    const auto& name = base_.param(i).name;
    if (!(config.values().at(name) == anchor_.values().at(name))) return false;
  }
  return true;
}

Configuration Subspace::compose(std::span<const double> free_unit) const {
  if (free_unit.size() != free_.size()) throw DomainError("compose: dimension mismatch");
  Configuration c = anchor_;
  for (std::size_t k = 0; k < free_.size(); ++k) {
    const auto& p = base_.param(free_[k]);
    c.set(p.name, p.decode(free_unit[k]));
  }
  return c;
}

std::vector<double> Subspace::encode_free(const Configuration& config) const {
  std::vector<double> out(free_.size());
  for (std::size_t k = 0; k < free_.size(); ++k) {
    const auto& p = base_.param(free_[k]);
    out[k] = p.encode(config.at(p.name));
  }
  return out;
}

Configuration Subspace::project(const Configuration& config) const {
  Configuration c = anchor_;
  for (auto i : free_) {
    const auto& name = base_.param(i).name;
    c.set(name, config.at(name));
  }
  base_.validate(c);
  return c;
}

nlohmann::json Subspace::to_json() const {
  return nlohmann::json{{"space", base_.to_json()},
                        {"free", free_names()},
                        {"anchor", config_to_json(anchor_)}};
}

Subspace Subspace::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("space")) {
    throw DomainError("subspace JSON must contain 'space'");
  }
  auto base = ConfigSpace::from_json(j["space"]);
  auto free = j.contains("free") ? j["free"].get<std::vector<std::string>>() : base.names();
  auto anchor = j.contains("anchor") ? config_from_json(base, j["anchor"])
                                     : base.default_configuration();
  return Subspace(std::move(base), free, std::move(anchor));
}

// --- sampling / restriction --------------------------------------------------

Configuration sample_uniform(const ConfigSpace& space, Rng& rng) {
  Configuration c;
  for (const auto& p : space.params()) c.set(p.name, p.decode(rng.uniform()));
  return c;
}

Configuration sample_uniform(const Subspace& subspace, Rng& rng) {
  std::vector<double> u(subspace.free_dim());
  for (auto& x : u) x = rng.uniform();
  return subspace.compose(u);
}

namespace {

std::vector<std::size_t> rank_by_importance(const ConfigSpace& space,
                                            const std::map<std::string, double>& importance) {
  std::vector<double> values(space.dim());
  for (std::size_t i = 0; i < space.dim(); ++i) {
    const auto it = importance.find(space.param(i).name);
    if (it == importance.end()) {
      throw DomainError("importance report lacks parameter '" + space.param(i).name + "'");
    }
    values[i] = it->second;
  }
  std::vector<std::size_t> order(space.dim());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

}  // namespace

Restriction restrict_top_k(const ConfigSpace& space,
                           const std::map<std::string, double>& importance, std::size_t k,
                           const Configuration& anchor) {
  if (k == 0) throw DomainError("restrict: k must be >= 1");
  Restriction out;
  if (k > space.dim()) {
    out.warnings.push_back("requested k=" + std::to_string(k) + " exceeds dimension " +
                           std::to_string(space.dim()) + "; clamped");
    k = space.dim();
  }
  const auto order = rank_by_importance(space, importance);
  std::vector<std::string> free;
  for (std::size_t r = 0; r < k; ++r) free.push_back(space.param(order[r]).name);
  out.subspace = Subspace(space, free, anchor);
  return out;
}

std::size_t k_for_importance_mass(const ConfigSpace& space,
                                  const std::map<std::string, double>& importance,
                                  double mass) {
  const auto order = rank_by_importance(space, importance);
  double total = 0.0;
  for (const auto& [_, v] : importance) total += v;
  if (!(total > 0.0)) return 1;
  double acc = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    acc += importance.at(space.param(order[r]).name);
    if (acc / total >= mass) return r + 1;
  }
  return order.size();
}

}  // namespace ahpo::hpspace
