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

// Hyperparameter importance by functional ANOVA.
//
// A regression forest is fit to (encoded configuration, objective) pairs.
// Each tree is piecewise constant on a partition of [0,1]^d into axis-aligned
// cells, so its marginals under the uniform measure, and the variance of each
// ANOVA component, are exact finite sums over leaves. Importance of a set of
// dimensions U is V_U / V per tree, averaged over trees.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ahpo/hpspace.hpp"
#include "ahpo/rng.hpp"
#include "ahpo/trials.hpp"

namespace ahpo::fanova {

/// Row-major design matrix of encoded coordinates plus responses.
struct TrainingData {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const noexcept { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, dim}; }
  void add(std::span<const double> row, double response);
};

/// Ok trials of every history, encoded in `space` (the full base space).
TrainingData training_data(std::span<const trials::RoundHistory> histories,
                           const hpspace::ConfigSpace& space);

class RegressionTree {
 public:
  struct Node {
    int split_dim = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // mean response of the node's training subset
    std::size_t count = 0;
  };

  struct Leaf {
    double value = 0.0;
    std::vector<double> lower;  // cell is [lower, upper) per dimension
    std::vector<double> upper;
    double volume() const;
  };

  /// Greedy fit: every impure node splits at the threshold minimizing the
  /// children's summed squared error, with candidate thresholds at midpoints
  /// between consecutive distinct coordinates. Minimum leaf size 1, no depth
  /// limit. `rows` selects (with repetition) the samples to use.
  static RegressionTree fit(const TrainingData& data, std::span<const std::size_t> rows);
  static RegressionTree fit(const TrainingData& data);

  double predict(std::span<const double> x) const;

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Leaf>& leaves() const noexcept { return leaves_; }

 private:
  std::size_t dim_ = 0;
  std::vector<Node> nodes_;
  std::vector<Leaf> leaves_;
};

struct ForestOptions {
  std::size_t n_trees = 16;
  bool bootstrap = true;
  std::size_t threads = 1;
};

class Forest {
 public:
  Forest() = default;
  Forest(std::vector<RegressionTree> trees, std::vector<std::uint64_t> seeds)
      : trees_(std::move(trees)), seeds_(std::move(seeds)) {}

  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
  /// Key of the random stream each tree's bootstrap was drawn from.
  const std::vector<std::uint64_t>& seeds() const noexcept { return seeds_; }
  std::size_t size() const noexcept { return trees_.size(); }
  double predict(std::span<const double> x) const;

 private:
  std::vector<RegressionTree> trees_;
  std::vector<std::uint64_t> seeds_;
};

/// Tree t bootstraps from rng.split("tree", t), so the forest does not depend
/// on the thread count. Throws InsufficientDataError on fewer than 2 samples.
Forest fit_forest(const TrainingData& data, const ForestOptions& options, const Rng& rng);
Forest fit_forest(std::span<const trials::RoundHistory> histories,
                  const hpspace::ConfigSpace& space, const ForestOptions& options,
                  const Rng& rng);

/// Mean of the tree's prediction over the dimensions outside `dims`, with
/// the coordinates in `dims` fixed to `x` (uniform measure).
double marginal(const RegressionTree& tree, std::span<const std::size_t> dims,
                std::span<const double> x);

using ParamPair = std::pair<std::string, std::string>;

struct ImportanceReport {
  std::vector<std::string> params;  // declaration order
  std::map<std::string, double> unary;
  std::map<ParamPair, double> pairwise;  // keys ordered by declaration index
  double total_variance = 0.0;
  bool degenerate = false;

  nlohmann::json to_json() const;
  static ImportanceReport from_json(const nlohmann::json& j);
  /// Two columns: param,importance (unary only, declaration order).
  std::string to_csv() const;
};

/// Exact per-tree decomposition, averaged over trees. max_order is 1
/// (unary only) or 2 (adds pairwise components).
ImportanceReport variance_decomposition(const Forest& forest, const hpspace::ConfigSpace& space,
                                        int max_order = 1);

/// Complete factorial table over discrete levels; values are row-major with
/// the last dimension varying fastest. NaN marks a missing cell.
struct FactorialTable {
  std::vector<std::string> names;
  std::vector<std::size_t> levels;
  std::vector<double> values;

  std::size_t cells() const;
};

/// Ground-truth ANOVA decomposition by direct summation over the table.
/// Throws DomainError for a missing cell or an oversized table.
ImportanceReport importance_bruteforce(const FactorialTable& table, int max_order = 2);

struct ImportanceOptions {
  ForestOptions forest;
  /// Forest streams derive from (seed, "fanova", task_index).
  std::uint64_t seed = 0;
};

/// One forest per round, unary fractions averaged with weights equal to each
/// round's ok-trial count. Rounds with fewer than 2 ok trials or a constant
/// objective count as degenerate and contribute zeros.
ImportanceReport get_param_imp(std::span<const trials::RoundHistory> histories,
                               const hpspace::ConfigSpace& space,
                               const ImportanceOptions& options);

/// Weighted mean of unary fractions; `degenerate` iff every input is.
ImportanceReport aggregate_unary(std::span<const ImportanceReport> reports,
                                 std::span<const double> weights,
                                 const hpspace::ConfigSpace& space);

}  // namespace ahpo::fanova
