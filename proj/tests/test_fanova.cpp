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
#include <numeric>

#include <nlohmann/json.hpp>

#include "ahpo/error.hpp"
#include "ahpo/fanova.hpp"
#include "oracles.hpp"

namespace ahpo::fanova {
namespace {

using hpspace::ConfigSpace;
using hpspace::ParamSpec;

struct Grid {
  ConfigSpace space;
  FactorialTable table;
  TrainingData data;
};

// Integer parameters with the given level counts; encoded cells sit at bin
// midpoints, so one exact-fit tree reproduces the table.
Grid make_grid(const std::vector<std::size_t>& levels,
               const std::function<double(const std::vector<std::size_t>&)>& f) {
  Grid g;
  std::vector<ParamSpec> params;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const auto name = "p" + std::to_string(k);
    params.push_back(ParamSpec::integer(name, 0, static_cast<std::int64_t>(levels[k]) - 1, 0));
    g.table.names.push_back(name);
  }
  g.space = ConfigSpace(params);
  g.table.levels = levels;
  g.data.dim = levels.size();
  std::vector<std::size_t> idx(levels.size(), 0);
  const std::size_t cells =
      std::accumulate(levels.begin(), levels.end(), std::size_t{1}, std::multiplies<>());
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t rem = c;
    for (std::size_t k = levels.size(); k-- > 0;) {
      idx[k] = rem % levels[k];
      rem /= levels[k];
    }
    const double v = f(idx);
    g.table.values.push_back(v);
    std::vector<double> u(levels.size());
    for (std::size_t k = 0; k < levels.size(); ++k) {
      u[k] = (static_cast<double>(idx[k]) + 0.5) / static_cast<double>(levels[k]);
    }
    g.data.add(u, v);
  }
  return g;
}

Forest exact_forest(const TrainingData& data) {
  ForestOptions o;
  o.n_trees = 1;
  o.bootstrap = false;
  return fit_forest(data, o, Rng(0));
}

TEST(Tree, PartitionsUnitCube) {
  Rng rng(1);
  TrainingData data;
  data.dim = 3;
  for (int i = 0; i < 60; ++i) {
    const double r[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
    data.add(r, std::sin(5 * r[0]) + r[1] * r[2]);
  }
  const auto tree = RegressionTree::fit(data);
  double vol = 0.0;
  for (const auto& leaf : tree.leaves()) vol += leaf.volume();
  EXPECT_NEAR(vol, 1.0, 1e-12);
  // Exact fit on distinct points.
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_DOUBLE_EQ(tree.predict(data.row(i)), data.y[i]);
}

TEST(Tree, ConstantObjectiveIsSingleLeaf) {
  const auto g = make_grid({3, 3}, [](const auto&) { return 0.25; });
  ForestOptions o;
  o.n_trees = 4;
  const auto forest = fit_forest(g.data, o, Rng(3));
  for (const auto& t : forest.trees()) EXPECT_EQ(t.leaves().size(), 1u);
  const auto r = variance_decomposition(forest, g.space, 2);
  EXPECT_TRUE(r.degenerate);
  for (const auto& [_, v] : r.unary) EXPECT_EQ(v, 0.0);
}

TEST(Tree, TooFewSamples) {
  TrainingData data;
  data.dim = 1;
  const double x[1] = {0.5};
  data.add(x, 1.0);
  EXPECT_THROW(fit_forest(data, {}, Rng(0)), InsufficientDataError);
}

TEST(Tree, ReproducesFactorialTable) {
  Rng rng(5);
  const auto g = make_grid({5, 5}, [&](const auto&) { return rng.uniform(); });
  const auto forest = exact_forest(g.data);
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    EXPECT_DOUBLE_EQ(forest.predict(g.data.row(i)), g.data.y[i]);
  }
}

TEST(Marginal, SingleLeafAndOneDimTree) {
  const auto constant = make_grid({2, 2}, [](const auto&) { return 3.0; });
  const auto t0 = RegressionTree::fit(constant.data);
  const std::size_t dim0[] = {0};
  const double x[] = {0.7};
  EXPECT_DOUBLE_EQ(marginal(t0, dim0, x), 3.0);

  const auto only0 = make_grid({4, 3}, [](const auto& i) { return static_cast<double>(i[0] * i[0]); });
  const auto t1 = RegressionTree::fit(only0.data);
  for (double u : {0.1, 0.3, 0.6, 0.9}) {
    const double xs[] = {u};
    const double full[] = {u, 0.5};
    EXPECT_DOUBLE_EQ(marginal(t1, dim0, xs), t1.predict(full));
  }
}

TEST(Marginal, RowMeanOfTable) {
  Rng rng(9);
  const auto g = make_grid({5, 5}, [&](const auto&) { return rng.uniform(); });
  const auto tree = RegressionTree::fit(g.data);
  const std::size_t dim0[] = {0};
  for (std::size_t r = 0; r < 5; ++r) {
    double row_mean = 0.0;
    for (std::size_t c = 0; c < 5; ++c) row_mean += g.table.values[r * 5 + c] / 5.0;
    const double x[] = {(static_cast<double>(r) + 0.5) / 5.0};
    EXPECT_NEAR(marginal(tree, dim0, x), row_mean, 1e-12);
  }
}

TEST(Decomposition, SingleVariable) {
  const auto g = make_grid({8, 8}, [](const auto& i) { return static_cast<double>(i[0]); });
  const auto r = variance_decomposition(exact_forest(g.data), g.space, 2);
  EXPECT_NEAR(r.unary.at("p0"), 1.0, 1e-9);
  EXPECT_NEAR(r.unary.at("p1"), 0.0, 1e-12);
}

TEST(Decomposition, ProductOnTwoByTwo) {
  // Hand ANOVA of {0,0,0,1}: mean 1/4, main effects +-1/4, interaction +-1/4,
  // so each of the three components carries (1/16) / (3/16) = 1/3.
  const auto g = make_grid({2, 2}, [](const auto& i) { return static_cast<double>(i[0] * i[1]); });
  const auto r = variance_decomposition(exact_forest(g.data), g.space, 2);
  EXPECT_NEAR(r.unary.at("p0"), 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.unary.at("p1"), 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.pairwise.at({"p0", "p1"}), 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.total_variance, 3.0 / 16.0, 1e-12);
  const auto b = importance_bruteforce(g.table);
  EXPECT_NEAR(b.unary.at("p0"), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(b.pairwise.at({"p0", "p1"}), 1.0 / 3.0, 1e-12);
}

TEST(Bruteforce, AdditiveAndSingle) {
  const auto single = make_grid({2, 2}, [](const auto& i) { return static_cast<double>(i[0]); });
  EXPECT_NEAR(importance_bruteforce(single.table).unary.at("p0"), 1.0, 1e-12);
  const auto add = make_grid({3, 3}, [](const auto& i) { return static_cast<double>(i[0] + i[1]); });
  const auto r = importance_bruteforce(add.table);
  EXPECT_NEAR(r.unary.at("p0"), 0.5, 1e-12);
  EXPECT_NEAR(r.unary.at("p1"), 0.5, 1e-12);
  EXPECT_NEAR(r.pairwise.at({"p0", "p1"}), 0.0, 1e-12);
  const auto flat = make_grid({3, 2}, [](const auto&) { return 1.0; });
  EXPECT_TRUE(importance_bruteforce(flat.table).degenerate);
}

TEST(Bruteforce, MissingCellAndLimits) {
  auto g = make_grid({2, 3}, [](const auto& i) { return static_cast<double>(i[1]); });
  g.table.values[4] = std::nan("");
  EXPECT_THROW(importance_bruteforce(g.table), DomainError);
  FactorialTable big;
  big.levels = {9};
  big.names = {"a"};
  big.values.assign(9, 0.0);
  EXPECT_THROW(importance_bruteforce(big), DomainError);
}

TEST(Bruteforce, MatchesIndependentOracle) {
  Rng rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<std::size_t> levels;
    const auto d = 2 + rng.below(2);
    for (std::size_t k = 0; k < d; ++k) levels.push_back(2 + rng.below(4));
    const auto g = make_grid(levels, [&](const auto&) { return rng.normal(); });
    const auto oracle = testing::anova_oracle(g.table.values, levels);
    const auto r = importance_bruteforce(g.table);
    EXPECT_NEAR(r.total_variance, oracle.at(0), 1e-12);
    for (std::size_t k = 0; k < d; ++k) {
      EXPECT_NEAR(r.unary.at(g.table.names[k]), oracle.at(1u << k) / oracle.at(0), 1e-10);
    }
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a + 1; b < d; ++b) {
        EXPECT_NEAR(r.pairwise.at({g.table.names[a], g.table.names[b]}),
                    oracle.at((1u << a) | (1u << b)) / oracle.at(0), 1e-10);
      }
    }
  }
}

TEST(Decomposition, TreeMatchesOracleOnRandomTables) {
  Rng rng(23);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<std::size_t> levels;
    const auto d = 2 + rng.below(2);
    for (std::size_t k = 0; k < d; ++k) levels.push_back(2 + rng.below(4));
    const auto g = make_grid(levels, [&](const auto&) { return rng.uniform(); });
    const auto oracle = testing::anova_oracle(g.table.values, levels);
    const auto r = variance_decomposition(exact_forest(g.data), g.space, 2);
    for (std::size_t k = 0; k < d; ++k) {
      EXPECT_NEAR(r.unary.at(g.table.names[k]), oracle.at(1u << k) / oracle.at(0), 1e-9);
    }
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a + 1; b < d; ++b) {
        EXPECT_NEAR(r.pairwise.at({g.table.names[a], g.table.names[b]}),
                    oracle.at((1u << a) | (1u << b)) / oracle.at(0), 1e-9);
      }
    }
  }
}

TEST(Decomposition, ScaleShiftAndOrderInvariance) {
  Rng rng(31);
  const auto g = make_grid({3, 4, 2}, [&](const auto&) { return rng.uniform(); });
  auto scaled = g.data;
  for (auto& y : scaled.y) y = 3.0 * y + 11.0;
  ForestOptions o;
  o.n_trees = 6;
  const auto a = variance_decomposition(fit_forest(g.data, o, Rng(4)), g.space, 2);
  const auto b = variance_decomposition(fit_forest(scaled, o, Rng(4)), g.space, 2);
  const auto a1 = variance_decomposition(fit_forest(g.data, o, Rng(4)), g.space, 1);
  EXPECT_NEAR(b.total_variance, 9.0 * a.total_variance, 1e-12 * b.total_variance);
  double sum = 0.0;
  for (const auto& [k, v] : a.unary) {
    EXPECT_NEAR(b.unary.at(k), v, 1e-12);
    EXPECT_EQ(a1.unary.at(k), v);
    EXPECT_GE(v, 0.0);
    sum += v;
  }
  for (const auto& [_, v] : a.pairwise) sum += v;
  EXPECT_LE(sum, 1.0 + 1e-6);
  EXPECT_TRUE(a1.pairwise.empty());
}

TEST(Forest, ThreadCountDoesNotChangeResult) {
  Rng rng(2);
  TrainingData data;
  data.dim = 2;
  for (int i = 0; i < 80; ++i) {
    const double r[2] = {rng.uniform(), rng.uniform()};
    data.add(r, r[0] * r[0] + 0.1 * r[1]);
  }
  ForestOptions one, many;
  one.threads = 1;
  many.threads = 8;
  const auto a = fit_forest(data, one, Rng(10));
  const auto b = fit_forest(data, many, Rng(10));
  EXPECT_EQ(a.seeds(), b.seeds());
  const auto ra = variance_decomposition(a, ConfigSpace({ParamSpec::linear("x", 0, 1, 0),
                                                         ParamSpec::linear("y", 0, 1, 0)}));
  const auto rb = variance_decomposition(b, ConfigSpace({ParamSpec::linear("x", 0, 1, 0),
                                                         ParamSpec::linear("y", 0, 1, 0)}));
  EXPECT_EQ(ra.unary, rb.unary);
  EXPECT_GT(ra.unary.at("x"), 0.9);
}

trials::RoundHistory round_with(const ConfigSpace& space, std::size_t task, std::size_t n,
                                std::uint64_t seed,
                                const std::function<double(const hpspace::Configuration&)>& f) {
  trials::RoundHistory h(task, hpspace::Subspace::full(space));
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    trials::Trial t;
    t.trial_id = i;
    t.task_index = task;
    t.config = hpspace::sample_uniform(space, rng);
    t.objective = f(t.config);
    h.append(t);
  }
  return h;
}

TEST(GetParamImp, SingleRoundEqualsDecomposition) {
  const ConfigSpace space({ParamSpec::linear("a", 0, 1, 0), ParamSpec::linear("b", 0, 1, 0)});
  const auto h = round_with(space, 0, 40, 1, [](const auto& c) {
    return c.number("a") + 0.3 * c.number("b");
  });
  ImportanceOptions opt;
  opt.seed = 5;
  const auto r = get_param_imp(std::span(&h, 1), space, opt);
  const auto forest = fit_forest(std::span(&h, 1), space, opt.forest, Rng::derive(5, "fanova", 0));
  const auto d = variance_decomposition(forest, space, 1);
  EXPECT_EQ(r.unary, d.unary);
}

TEST(GetParamImp, WeightedMean) {
  const ConfigSpace space({ParamSpec::linear("lr", 0, 1, 0), ParamSpec::linear("wd", 0, 1, 0)});
  ImportanceReport a, b;
  a.params = b.params = {"lr", "wd"};
  a.unary = {{"lr", 0.8}, {"wd", 0.2}};
  b.unary = {{"lr", 0.6}, {"wd", 0.4}};
  const ImportanceReport both[] = {a, b};
  const double equal[] = {1.0, 1.0};
  const double skew[] = {30.0, 10.0};
  auto r = aggregate_unary(both, equal, space);
  EXPECT_NEAR(r.unary.at("lr"), 0.7, 1e-12);
  EXPECT_NEAR(r.unary.at("wd"), 0.3, 1e-12);
  r = aggregate_unary(both, skew, space);
  EXPECT_NEAR(r.unary.at("lr"), 0.75, 1e-12);
  EXPECT_NEAR(r.unary.at("wd"), 0.25, 1e-12);
}

TEST(GetParamImp, DegenerateRounds) {
  const ConfigSpace space({ParamSpec::linear("a", 0, 1, 0), ParamSpec::linear("b", 0, 1, 0)});
  const auto h = round_with(space, 0, 10, 1, [](const auto&) { return 0.5; });
  const auto r = get_param_imp(std::span(&h, 1), space, {});
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.unary.at("a"), 0.0);
  EXPECT_EQ(r.unary.at("b"), 0.0);
}

TEST(GetParamImp, RecoversDominantParameter) {
  const ConfigSpace space({ParamSpec::log("lr", 1e-4, 1e-1, 1e-2),
                           ParamSpec::log("wd", 1e-6, 1e-1, 1e-4),
                           ParamSpec::integer("mem", 20, 500, 200)});
  Rng noise(3);
  const auto h = round_with(space, 0, 200, 8, [&](const auto& c) {
    const double u = (std::log10(c.number("lr")) + 4.0) / 3.0;
    return -std::pow(u - 0.6, 2) + 0.01 * noise.normal();
  });
  const auto r = get_param_imp(std::span(&h, 1), space, {});
  EXPECT_GT(r.unary.at("lr"), 0.8);
  EXPECT_LT(r.unary.at("wd"), 0.1);
  EXPECT_LT(r.unary.at("mem"), 0.1);
}

TEST(Report, JsonAndCsv) {
  const auto g = make_grid({2, 2}, [](const auto& i) { return static_cast<double>(i[0] * i[1]); });
  const auto r = variance_decomposition(exact_forest(g.data), g.space, 2);
  const auto back = ImportanceReport::from_json(nlohmann::json::parse(r.to_json().dump()));
  EXPECT_EQ(back.unary, r.unary);
  EXPECT_EQ(back.pairwise, r.pairwise);
  EXPECT_EQ(back.degenerate, r.degenerate);
  EXPECT_EQ(r.to_csv().substr(0, 17), "param,importance\n");
}

}  // namespace
}  // namespace ahpo::fanova
