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
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ahpo/fanova.hpp"
#include "ahpo/trials.hpp"

namespace ahpo::metrics {

/// Lower-triangular matrix: at(i, j) is the test accuracy on task j after
/// training through task i, defined for j <= i.
class AccuracyMatrix {
 public:
  AccuracyMatrix() = default;
  /// Throws DomainError unless row i has i + 1 entries in [0, 1].
  explicit AccuracyMatrix(std::vector<std::vector<double>> rows);

  /// Appends the next row; its length must be size() + 1.
  void add_row(std::vector<double> row);
  std::size_t size() const noexcept { return rows_.size(); }
  double at(std::size_t i, std::size_t j) const;
  const std::vector<double>& row(std::size_t i) const { return rows_.at(i); }

 private:
  std::vector<std::vector<double>> rows_;
};

/// Mean of row i.
double stream_accuracy(const AccuracyMatrix& r, std::size_t i);
/// stream_accuracy for every row.
std::vector<double> sa_curve(const AccuracyMatrix& r);

/// SA curve of one run over a particular task order.
struct OrderedCurve {
  std::vector<double> sa;
  /// Identity of the tasks seen (e.g. their source indices), in run order.
  std::vector<std::size_t> tasks;
};

struct RobustnessRow {
  std::size_t step = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
};

/// Per-step mean and sample standard deviation across permutations. Needs at
/// least 2 curves of equal length; throws ComparabilityError when the curves
/// do not cover the same set of tasks.
std::vector<RobustnessRow> order_robustness(std::span<const OrderedCurve> curves);

struct TimeDemand {
  std::vector<double> task_cost_seconds;
  std::vector<std::size_t> task_trials;
  double total_cost_seconds = 0.0;
  std::size_t total_trials = 0;
  std::size_t predicted_trials = 0;

  bool matches_prediction() const noexcept { return total_trials == predicted_trials; }
};

TimeDemand time_demand(std::span<const trials::RoundHistory> rounds, std::size_t predicted_trials);

/// Sample standard deviation; 0 for fewer than 2 values.
double sample_std(std::span<const double> v);
double mean(std::span<const double> v);

struct SaCurveRow {
  std::size_t task = 0;
  double sa = 0.0;
  std::string policy;
  std::uint64_t seed = 0;
};

/// task,SA,policy,seed
std::string sa_curve_csv(std::span<const SaCurveRow> rows);

/// step,mean,std,policy
std::string robustness_csv(std::span<const std::pair<std::string, std::vector<RobustnessRow>>> rows);

/// task,param,importance (unary, declaration order).
std::string importance_csv(
    std::span<const std::pair<std::size_t, fanova::ImportanceReport>> reports);

}  // namespace ahpo::metrics
