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


#include "ahpo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ahpo/error.hpp"
#include "ahpo/format.hpp"

namespace ahpo::metrics {

AccuracyMatrix::AccuracyMatrix(std::vector<std::vector<double>> rows) {
  for (auto& r : rows) add_row(std::move(r));
}

void AccuracyMatrix::add_row(std::vector<double> row) {
  if (row.size() != rows_.size() + 1) {
    throw DomainError("accuracy matrix row " + std::to_string(rows_.size()) + " must have " +
                      std::to_string(rows_.size() + 1) + " entries");
  }
  for (double v : row) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("accuracy must lie in [0, 1]");
  }
  rows_.push_back(std::move(row));
}

double AccuracyMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= rows_.size() || j > i) throw DomainError("accuracy matrix entry undefined");
  return rows_[i][j];
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  // Shifted by the first value so identical inputs give exactly zero.
  const double shift = v[0];
  double sum = 0.0;
  for (double x : v) sum += x - shift;
  const double m = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - shift - m) * (x - shift - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double stream_accuracy(const AccuracyMatrix& r, std::size_t i) {
  if (i >= r.size()) throw DomainError("stream accuracy: row not populated");
  return mean(r.row(i));
}

std::vector<double> sa_curve(const AccuracyMatrix& r) {
  std::vector<double> out;
  for (std::size_t i = 0; i < r.size(); ++i) out.push_back(stream_accuracy(r, i));
  return out;
}

std::vector<RobustnessRow> order_robustness(std::span<const OrderedCurve> curves) {
  if (curves.size() < 2) throw DomainError("order robustness needs at least 2 permutations");
  auto sorted = [](std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto reference = sorted(curves[0].tasks);
  const auto steps = curves[0].sa.size();
  for (const auto& c : curves) {
    if (sorted(c.tasks) != reference) {
      throw ComparabilityError("permutations cover different task sets");
    }
    if (c.sa.size() != steps) throw ComparabilityError("permutation curves differ in length");
  }
  std::vector<RobustnessRow> rows;
  std::vector<double> column(curves.size());
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t p = 0; p < curves.size(); ++p) column[p] = curves[p].sa[s];
    rows.push_back({s, mean(column), sample_std(column)});
  }
  return rows;
}

TimeDemand time_demand(std::span<const trials::RoundHistory> rounds,
                       std::size_t predicted_trials) {
  TimeDemand d;
  d.predicted_trials = predicted_trials;
  for (const auto& r : rounds) {
    double cost = 0.0;
    for (const auto& t : r.trials()) cost += t.cost_seconds;
    d.task_cost_seconds.push_back(cost);
    d.task_trials.push_back(r.size());
    d.total_cost_seconds += cost;
    d.total_trials += r.size();
  }
  return d;
}

std::string sa_curve_csv(std::span<const SaCurveRow> rows) {
  std::ostringstream os;
  os << "task,SA,policy,seed\n";
  for (const auto& r : rows) {
    os << r.task << ',' << format_double(r.sa) << ',' << r.policy << ',' << r.seed << '\n';
  }
  return os.str();
}

std::string robustness_csv(
    std::span<const std::pair<std::string, std::vector<RobustnessRow>>> rows) {
  std::ostringstream os;
  os << "step,mean,std,policy\n";
  for (const auto& [policy, series] : rows) {
    for (const auto& r : series) {
      os << r.step << ',' << format_double(r.mean) << ',' << format_double(r.std) << ','
         << policy << '\n';
    }
  }
  return os.str();
}

std::string importance_csv(
    std::span<const std::pair<std::size_t, fanova::ImportanceReport>> reports) {
  std::ostringstream os;
  os << "task,param,importance\n";
  for (const auto& [task, report] : reports) {
    for (const auto& p : report.params) {
      const auto it = report.unary.find(p);
      os << task << ',' << p << ',' << format_double(it == report.unary.end() ? 0.0 : it->second)
         << '\n';
    }
  }
  return os.str();
}

}  // namespace ahpo::metrics
