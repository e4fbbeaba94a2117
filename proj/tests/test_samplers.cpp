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


#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "ahpo/error.hpp"
#include "ahpo/samplers.hpp"

namespace ahpo::samplers {
namespace {

using hpspace::Configuration;
using hpspace::ConfigSpace;
using hpspace::ParamSpec;
using hpspace::Subspace;
using trials::RoundHistory;
using trials::Trial;

ConfigSpace unit_space(std::size_t d) {
  std::vector<ParamSpec> p;
  for (std::size_t i = 0; i < d; ++i) p.push_back(ParamSpec::linear("x" + std::to_string(i), 0, 1, 0.5));
  return ConfigSpace(p);
}

void tell(RoundHistory& h, const Configuration& c, double objective) {
  Trial t;
  t.trial_id = h.size();
  t.config = c;
  t.objective = objective;
  h.append(t);
}

TEST(Spec, Validation) {
  SamplerSpec s;
  s.gamma_fraction = 1.0;
  EXPECT_THROW(s.validate(), DomainError);
  s = {};
  s.n_candidates = 0;
  EXPECT_THROW(s.validate(), DomainError);
  s = {};
  s.points_per_dim = 1;
  EXPECT_THROW(s.validate(), DomainError);
  s = {};
  s.kind = SamplerKind::grid;
  EXPECT_EQ(SamplerSpec::from_json(s.to_json()).kind, SamplerKind::grid);
}

TEST(Tpe, StartupEqualsUniformDraw) {
  const auto space = unit_space(3);
  const auto sub = Subspace::full(space);
  RoundHistory h(0, sub);
  SamplerSpec spec;
  Rng a(77), b(77);
  const auto c = ask(spec, sub, h, a);
  ASSERT_TRUE(c.has_value());
  EXPECT_EQ(*c, hpspace::sample_uniform(sub, b));
}

TEST(Grid, EnumeratesThenExhausts) {
  const auto space = unit_space(2);
  const auto sub = Subspace::full(space);
  RoundHistory h(0, sub);
  SamplerSpec spec;
  spec.kind = SamplerKind::grid;
  spec.points_per_dim = 3;
  Rng rng(1);
  std::set<std::pair<double, double>> seen;
  for (int i = 0; i < 9; ++i) {
    const auto c = ask(spec, sub, h, rng);
    ASSERT_TRUE(c.has_value());
    seen.insert({c->number("x0"), c->number("x1")});
    tell(h, *c, 0.0);
  }
  EXPECT_EQ(seen.size(), 9u);
  EXPECT_EQ(*seen.begin(), std::make_pair(0.0, 0.0));
  EXPECT_EQ(*seen.rbegin(), std::make_pair(1.0, 1.0));
  EXPECT_FALSE(ask(spec, sub, h, rng).has_value());
}

TEST(Grid, RowMajorOrder) {
  const auto sub = Subspace::full(unit_space(2));
  RoundHistory h(0, sub);
  SamplerSpec spec;
  spec.kind = SamplerKind::grid;
  spec.points_per_dim = 2;
  Rng rng(0);
  const auto batch = ask_batch(spec, sub, h, 10, rng);
  ASSERT_EQ(batch.size(), 4u);
  EXPECT_EQ(batch[1].number("x0"), 0.0);
  EXPECT_EQ(batch[1].number("x1"), 1.0);
  EXPECT_EQ(batch[2].number("x0"), 1.0);
}

TEST(TpeSplit, CeilingAndTies) {
  const auto sub = Subspace::full(unit_space(1));
  RoundHistory h(0, sub);
  for (int i = 0; i < 8; ++i) tell(h, sub.anchor(), 0.1 * i);
  auto s = tpe_split(h, 0.25);
  EXPECT_EQ(s.good.size(), 2u);
  EXPECT_EQ(s.bad.size(), 6u);
  EXPECT_EQ(s.good[0]->trial_id, 7u);

  RoundHistory ties(0, sub);
  for (double v : {1.0, 1.0, 1.0, 0.0}) tell(ties, sub.anchor(), v);
  s = tpe_split(ties, 0.25);
  ASSERT_EQ(s.good.size(), 1u);
  EXPECT_EQ(s.good[0]->trial_id, 0u);

  RoundHistory one(0, sub);
  tell(one, sub.anchor(), 0.5);
  EXPECT_THROW(tpe_split(one, 0.25), InsufficientDataError);
}

TEST(Parzen, DensityIntegratesToOne) {
  for (double prior : {0.0, 1.0}) {
    ParzenEstimator est({0.1, 0.15, 0.8, 0.95}, 0, 1e-3, prior);
    const int n = 20000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::exp(est.log_density((i + 0.5) / n));
    EXPECT_NEAR(s / n, 1.0, 1e-3) << "prior " << prior;
  }
}

TEST(Parzen, CategoricalAddOneSmoothing) {
  // 3 categories, observations in bin 0 twice and bin 2 once: (2+1)/(3+3).
  ParzenEstimator est({1.0 / 6, 1.0 / 6, 5.0 / 6}, 3, 1e-3, 1.0);
  EXPECT_NEAR(std::exp(est.log_density(1.0 / 6)), 3.0 * 0.5, 1e-12);
  EXPECT_NEAR(std::exp(est.log_density(0.5)), 3.0 * (1.0 / 6), 1e-12);
}

TEST(Parzen, BandwidthFloor) {
  ParzenEstimator est({0.4, 0.4, 0.4}, 0, 0.05, 1.0);
  EXPECT_DOUBLE_EQ(est.bandwidth(), 0.05);
}

TEST(Tpe, SubspaceProposalsKeepAnchor) {
  const auto space = unit_space(3);
  auto anchor = space.default_configuration();
  anchor.set("x2", 0.125);
  const Subspace sub(space, {"x0", "x1"}, anchor);
  RoundHistory h(0, sub);
  SamplerSpec spec;
  Rng rng(5);
  for (int i = 0; i < 30; ++i) {
    auto r = Rng::derive(5, "ask", 0, static_cast<std::uint64_t>(i));
    const auto c = ask(spec, sub, h, r);
    ASSERT_TRUE(c.has_value());
    ASSERT_TRUE(sub.contains(*c));
    EXPECT_EQ(c->number("x2"), 0.125);
    tell(h, *c, -std::pow(c->number("x0") - 0.3, 2));
  }
}

double run_tpe_1d(std::uint64_t seed, std::size_t n, double shift) {
  const auto sub = Subspace::full(unit_space(1));
  RoundHistory h(0, sub);
  SamplerSpec spec;
  double best_x = 0.0, best = -1e9;
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = Rng::derive(seed, "ask", 0, i);
    const auto c = ask(spec, sub, h, rng);
    const double x = c->number("x0");
    const double f = -(x - 0.7) * (x - 0.7) + shift;
    if (f > best) {
      best = f;
      best_x = x;
    }
    tell(h, *c, f);
  }
  return best_x;
}

TEST(Tpe, FindsQuadraticOptimum) {
  int hits = 0;
  for (std::uint64_t s = 0; s < 10; ++s) hits += std::abs(run_tpe_1d(s, 60, 0.0) - 0.7) <= 0.05;
  EXPECT_GE(hits, 9);
}

TEST(Tpe, ShiftInvariant) {
  for (std::uint64_t s = 0; s < 3; ++s) EXPECT_EQ(run_tpe_1d(s, 30, 0.0), run_tpe_1d(s, 30, 5.0));
}

TEST(Tpe, MixedKindsStayValid) {
  const ConfigSpace space({ParamSpec::log("lr", 1e-4, 1e-1, 1e-2),
                           ParamSpec::integer("n", 1, 5, 2),
                           ParamSpec::categorical("c", {"a", "b", "c"}, "a")});
  const auto sub = Subspace::full(space);
  RoundHistory h(0, sub);
  SamplerSpec spec;
  spec.n_startup = 4;
  for (std::uint64_t i = 0; i < 40; ++i) {
    auto rng = Rng::derive(1, "ask", 0, i);
    const auto c = ask(spec, sub, h, rng);
    ASSERT_TRUE(space.contains(*c));
    tell(h, *c, c->label("c") == "b" ? 1.0 : 0.0);
  }
  int b_late = 0;
  for (std::size_t i = 20; i < 40; ++i) b_late += h.trials()[i].config.label("c") == "b";
  EXPECT_GE(b_late, 12);
}

TEST(Batch, DeterministicAndSized) {
  const auto sub = Subspace::full(unit_space(2));
  RoundHistory h(0, sub);
  SamplerSpec spec;
  Rng a(3), b(3);
  const auto x = ask_batch(spec, sub, h, 4, a);
  const auto y = ask_batch(spec, sub, h, 4, b);
  EXPECT_EQ(x.size(), 4u);
  EXPECT_EQ(x, y);
}

}  // namespace
}  // namespace ahpo::samplers
