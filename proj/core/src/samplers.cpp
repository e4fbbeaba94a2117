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

#include "ahpo/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <nlohmann/json.hpp>

#include "ahpo/error.hpp"

namespace ahpo::samplers {

namespace {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double log_sum_exp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

bool visited(const hpspace::Configuration& c, const trials::RoundHistory& history,
             const std::vector<hpspace::Configuration>& pending) {
  for (const auto& t : history.trials()) {
    if (t.config == c) return true;
  }
  return std::find(pending.begin(), pending.end(), c) != pending.end();
}

std::optional<hpspace::Configuration> next_grid_point(
    const SamplerSpec& spec, const hpspace::Subspace& domain,
    const trials::RoundHistory& history, const std::vector<hpspace::Configuration>& pending) {
  const std::size_t d = domain.free_dim();
  const std::size_t p = spec.points_per_dim;
  std::vector<std::size_t> digits(d, 0);
  std::vector<double> unit(d);
  while (true) {
    for (std::size_t k = 0; k < d; ++k) {
      unit[k] = static_cast<double>(digits[k]) / static_cast<double>(p - 1);
    }
    auto c = domain.compose(unit);
    if (!visited(c, history, pending)) return c;
    // Row-major increment: the last free dimension varies fastest.
    std::size_t k = d;
    while (k > 0) {
      --k;
      if (++digits[k] < p) break;
      digits[k] = 0;
      if (k == 0) return std::nullopt;
    }
  }
}

hpspace::Configuration tpe_propose(const SamplerSpec& spec, const hpspace::Subspace& domain,
                                   const trials::RoundHistory& history, Rng& rng) {
  if (history.ok_count() < std::max<std::size_t>(spec.n_startup, 2)) {
    return hpspace::sample_uniform(domain, rng);
  }
  const auto split = tpe_split(history, spec.gamma_fraction);
  const std::size_t d = domain.free_dim();

  std::vector<std::vector<double>> good(d), bad(d);
  for (const auto* t : split.good) {
    const auto u = domain.encode_free(t->config);
    for (std::size_t k = 0; k < d; ++k) good[k].push_back(u[k]);
  }
  for (const auto* t : split.bad) {
    const auto u = domain.encode_free(t->config);
    for (std::size_t k = 0; k < d; ++k) bad[k].push_back(u[k]);
  }

  std::vector<ParzenEstimator> l, g;
  l.reserve(d);
  g.reserve(d);
  for (std::size_t k = 0; k < d; ++k) {
    const auto& p = domain.base().param(domain.free_indices()[k]);
    const std::size_t cats =
        p.kind == hpspace::ParamKind::categorical ? p.cardinality() : std::size_t{0};
    // Bandwidths never drop below 1 / min(100, n + 1) so the good set cannot
    // collapse onto a single early point.
    auto floor_for = [&](std::size_t n) {
      return std::max(spec.bandwidth_floor,
                      1.0 / static_cast<double>(std::min<std::size_t>(100, n + 1)));
    };
    const auto n_good = good[k].size(), n_bad = bad[k].size();
    l.emplace_back(std::move(good[k]), cats, floor_for(n_good), spec.prior_weight);
    g.emplace_back(std::move(bad[k]), cats, floor_for(n_bad), spec.prior_weight);
  }

  std::vector<double> best_u;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<double> u(d);
  for (std::size_t c = 0; c < spec.n_candidates; ++c) {
    double score = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      u[k] = l[k].sample(rng);
      score += l[k].log_density(u[k]) - g[k].log_density(u[k]);
    }
    if (best_u.empty() || score > best_score) {
      best_score = score;
      best_u = u;
    }
  }
  return domain.compose(best_u);
}

}  // namespace

std::string_view to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::random: return "random";
    case SamplerKind::grid: return "grid";
    case SamplerKind::tpe: return "tpe";
  }
  return "?";
}

SamplerKind sampler_kind_from_string(std::string_view s) {
  if (s == "random") return SamplerKind::random;
  if (s == "grid") return SamplerKind::grid;
  if (s == "tpe") return SamplerKind::tpe;
  throw DomainError("unknown sampler kind '" + std::string(s) + "'");
}

void SamplerSpec::validate() const {
  if (!(gamma_fraction > 0.0 && gamma_fraction < 1.0)) {
    throw DomainError("gamma_fraction must lie in (0, 1)");
  }
  if (n_candidates < 1) throw DomainError("n_candidates must be >= 1");
  if (!(bandwidth_floor > 0.0)) throw DomainError("bandwidth_floor must be > 0");
  if (!(prior_weight >= 0.0)) throw DomainError("prior_weight must be >= 0");
  if (points_per_dim < 2) throw DomainError("points_per_dim must be >= 2");
  if (batch_size < 1) throw DomainError("batch_size must be >= 1");
}

nlohmann::json SamplerSpec::to_json() const {
  return nlohmann::json{{"kind", std::string(to_string(kind))},
                        {"gamma_fraction", gamma_fraction},
                        {"n_candidates", n_candidates},
                        {"bandwidth_floor", bandwidth_floor},
                        {"n_startup", n_startup},
                        {"prior_weight", prior_weight},
                        {"points_per_dim", points_per_dim},
                        {"batch_size", batch_size}};
}

SamplerSpec SamplerSpec::from_json(const nlohmann::json& j) {
  SamplerSpec s;
  if (!j.is_object()) throw DomainError("sampler spec must be an object");
  if (j.contains("kind")) s.kind = sampler_kind_from_string(j.at("kind").get<std::string>());
  s.gamma_fraction = j.value("gamma_fraction", s.gamma_fraction);
  s.n_candidates = j.value("n_candidates", s.n_candidates);
  s.bandwidth_floor = j.value("bandwidth_floor", s.bandwidth_floor);
  s.n_startup = j.value("n_startup", s.n_startup);
  s.prior_weight = j.value("prior_weight", s.prior_weight);
  s.points_per_dim = j.value("points_per_dim", s.points_per_dim);
  s.batch_size = j.value("batch_size", s.batch_size);
  s.validate();
  return s;
}

TpeSplit tpe_split(const trials::RoundHistory& history, double gamma_fraction) {
  std::vector<const trials::Trial*> ok;
  for (const auto& t : history.trials()) {
    if (t.ok()) ok.push_back(&t);
  }
  if (ok.size() < 2) {
    throw InsufficientDataError("TPE split needs at least 2 successful trials, have " +
                                std::to_string(ok.size()));
  }
  std::stable_sort(ok.begin(), ok.end(), [](const trials::Trial* a, const trials::Trial* b) {
    return a->objective > b->objective;
  });
  auto n_good = static_cast<std::size_t>(
      std::ceil(gamma_fraction * static_cast<double>(ok.size())));
  n_good = std::clamp<std::size_t>(n_good, 1, ok.size() - 1);
  TpeSplit out;
  out.good.assign(ok.begin(), ok.begin() + static_cast<std::ptrdiff_t>(n_good));
  out.bad.assign(ok.begin() + static_cast<std::ptrdiff_t>(n_good), ok.end());
  return out;
}

std::optional<hpspace::Configuration> ask(const SamplerSpec& spec,
                                          const hpspace::Subspace& domain,
                                          const trials::RoundHistory& history, Rng& rng) {
  switch (spec.kind) {
    case SamplerKind::random: return hpspace::sample_uniform(domain, rng);
    case SamplerKind::grid: return next_grid_point(spec, domain, history, {});
    case SamplerKind::tpe: return tpe_propose(spec, domain, history, rng);
  }
  return std::nullopt;
}

std::vector<hpspace::Configuration> ask_batch(const SamplerSpec& spec,
                                              const hpspace::Subspace& domain,
                                              const trials::RoundHistory& history,
                                              std::size_t count, Rng& rng) {
  std::vector<hpspace::Configuration> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (spec.kind == SamplerKind::grid) {
      auto c = next_grid_point(spec, domain, history, out);
      if (!c) break;
      out.push_back(std::move(*c));
    } else {
      out.push_back(*ask(spec, domain, history, rng));
    }
  }
  return out;
}

// --- ParzenEstimator ---------------------------------------------------------

ParzenEstimator::ParzenEstimator(std::vector<double> points, std::size_t categories,
                                 double bandwidth_floor, double prior_weight)
    : points_(std::move(points)), categories_(categories), prior_weight_(prior_weight) {
  const auto n = static_cast<double>(points_.size());
  if (categories_ > 0) {
    std::vector<double> counts(categories_, 1.0);
    for (double u : points_) {
      auto c = static_cast<std::size_t>(std::floor(u * static_cast<double>(categories_)));
      counts[std::min(c, categories_ - 1)] += 1.0;
    }
    category_p_.resize(categories_);
    for (std::size_t c = 0; c < categories_; ++c) {
      category_p_[c] = counts[c] / (n + static_cast<double>(categories_));
    }
    return;
  }
  double sd = 0.0;
  if (points_.size() >= 2) {
    double mean = 0.0;
    for (double u : points_) mean += u;
    mean /= n;
    double ss = 0.0;
    for (double u : points_) ss += (u - mean) * (u - mean);
    sd = std::sqrt(ss / (n - 1.0));
  }
  bandwidth_ = points_.empty() ? 1.0 : std::max(std::pow(n, -0.2) * sd, bandwidth_floor);
  mass_.reserve(points_.size());
  for (double mu : points_) {
    const double m =
        std_normal_cdf((1.0 - mu) / bandwidth_) - std_normal_cdf((0.0 - mu) / bandwidth_);
    mass_.push_back(std::max(m, 1e-300));
  }
}

double ParzenEstimator::log_density(double u) const {
  if (categories_ > 0) {
    auto c = static_cast<std::size_t>(std::floor(std::clamp(u, 0.0, 1.0) *
                                                 static_cast<double>(categories_)));
    // Density w.r.t. the uniform measure on [0,1]: probability / bin width.
    return std::log(category_p_[std::min(c, categories_ - 1)] *
                    static_cast<double>(categories_));
  }
  const double total = static_cast<double>(points_.size()) + prior_weight_;
  if (!(total > 0.0)) return 0.0;
  std::vector<double> terms;
  terms.reserve(points_.size() + 1);
  const double log_norm = std::log(bandwidth_) + 0.5 * std::log(2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double z = (u - points_[i]) / bandwidth_;
    terms.push_back(-0.5 * z * z - log_norm - std::log(mass_[i]));
  }
  if (prior_weight_ > 0.0) terms.push_back(std::log(prior_weight_));
  return log_sum_exp(terms) - std::log(total);
}

double ParzenEstimator::sample(Rng& rng) const {
  if (categories_ > 0) {
    double r = rng.uniform();
    std::size_t c = 0;
    for (; c + 1 < categories_; ++c) {
      if (r < category_p_[c]) break;
      r -= category_p_[c];
    }
    return (static_cast<double>(c) + 0.5) / static_cast<double>(categories_);
  }
  const double total = static_cast<double>(points_.size()) + prior_weight_;
  const double pick = rng.uniform() * total;
  if (points_.empty() || pick >= static_cast<double>(points_.size())) return rng.uniform();
  const double mu = points_[std::min(static_cast<std::size_t>(pick), points_.size() - 1)];
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double x = mu + bandwidth_ * rng.normal();
    if (x >= 0.0 && x <= 1.0) return x;
  }
  return std::clamp(mu, 0.0, 1.0);
}

}  // namespace ahpo::samplers
