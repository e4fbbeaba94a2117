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

#include "ahpo/fanova.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ahpo/error.hpp"
#include "ahpo/format.hpp"
#include "ahpo/parallel.hpp"

namespace ahpo::fanova {

void TrainingData::add(std::span<const double> r, double response) {
  if (dim == 0) dim = r.size();
  if (r.size() != dim) throw DomainError("training row has wrong dimension");
  x.insert(x.end(), r.begin(), r.end());
  y.push_back(response);
}

TrainingData training_data(std::span<const trials::RoundHistory> histories,
                           const hpspace::ConfigSpace& space) {
  TrainingData data;
  data.dim = space.dim();
  for (const auto& h : histories) {
    for (const auto& t : h.trials()) {
      if (t.ok()) data.add(space.encode(t.config), t.objective);
    }
  }
  return data;
}

// --- RegressionTree ----------------------------------------------------------

double RegressionTree::Leaf::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lower.size(); ++i) v *= upper[i] - lower[i];
  return v;
}

namespace {

struct SplitChoice {
  int dim = -1;
  double threshold = 0.0;
  double sse = 0.0;
};

SplitChoice best_split(const TrainingData& data, const std::vector<std::size_t>& rows,
                       double node_mean, double node_sse) {
  SplitChoice best;
  // Relative slack so that exact ties resolve by (dim, threshold) order even
  // after shifting or rescaling the responses.
  const double slack = 1e-12 * node_sse;
  std::vector<std::size_t> sorted(rows);
  const auto n = sorted.size();
  for (std::size_t d = 0; d < data.dim; ++d) {
    std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
      return data.x[a * data.dim + d] < data.x[b * data.dim + d];
    });
    double total_s = 0.0, total_s2 = 0.0;
    for (auto r : sorted) {
      const double dev = data.y[r] - node_mean;
      total_s += dev;
      total_s2 += dev * dev;
    }
    double left_s = 0.0, left_s2 = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      const double dev = data.y[sorted[k - 1]] - node_mean;
      left_s += dev;
      left_s2 += dev * dev;
      const double a = data.x[sorted[k - 1] * data.dim + d];
      const double b = data.x[sorted[k] * data.dim + d];
      if (!(a < b)) continue;
      const auto nl = static_cast<double>(k);
      const auto nr = static_cast<double>(n - k);
      const double right_s = total_s - left_s;
      const double right_s2 = total_s2 - left_s2;
      const double sse = (left_s2 - left_s * left_s / nl) + (right_s2 - right_s * right_s / nr);
      if (best.dim < 0 || sse < best.sse - slack) {
        best.dim = static_cast<int>(d);
        best.threshold = 0.5 * (a + b);
        best.sse = sse;
      }
    }
  }
  return best;
}

}  // namespace

RegressionTree RegressionTree::fit(const TrainingData& data) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit(data, rows);
}

RegressionTree RegressionTree::fit(const TrainingData& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw InsufficientDataError("cannot fit a tree to zero samples");
  RegressionTree tree;
  tree.dim_ = data.dim;

  struct Frame {
    int node;
    std::vector<std::size_t> rows;
    std::vector<double> lower, upper;
  };
  std::vector<Frame> stack;
  tree.nodes_.push_back({});
  stack.push_back({0, std::vector<std::size_t>(rows.begin(), rows.end()),
                   std::vector<double>(data.dim, 0.0), std::vector<double>(data.dim, 1.0)});

  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    const auto n = static_cast<double>(f.rows.size());
    double sum = 0.0, lo_y = data.y[f.rows[0]], hi_y = lo_y;
    for (auto r : f.rows) {
      sum += data.y[r];
      lo_y = std::min(lo_y, data.y[r]);
      hi_y = std::max(hi_y, data.y[r]);
    }
    const double mean = sum / n;
    auto& node = tree.nodes_[static_cast<std::size_t>(f.node)];
    node.value = mean;
    node.count = f.rows.size();

    SplitChoice split;
    if (lo_y < hi_y) {
      double sse = 0.0;
      for (auto r : f.rows) sse += (data.y[r] - mean) * (data.y[r] - mean);
      split = best_split(data, f.rows, mean, sse);
    }
    if (split.dim < 0) {
      tree.leaves_.push_back({mean, std::move(f.lower), std::move(f.upper)});
      continue;
    }

    const auto d = static_cast<std::size_t>(split.dim);
    Frame left{static_cast<int>(tree.nodes_.size()), {}, f.lower, f.upper};
    Frame right{static_cast<int>(tree.nodes_.size() + 1), {}, std::move(f.lower),
                std::move(f.upper)};
    for (auto r : f.rows) {
      (data.x[r * data.dim + d] < split.threshold ? left.rows : right.rows).push_back(r);
    }
    left.upper[d] = split.threshold;
    right.lower[d] = split.threshold;

    auto& parent = tree.nodes_[static_cast<std::size_t>(f.node)];
    parent.split_dim = split.dim;
    parent.threshold = split.threshold;
    parent.left = left.node;
    parent.right = right.node;
    tree.nodes_.push_back({});
    tree.nodes_.push_back({});
    stack.push_back(std::move(right));
    stack.push_back(std::move(left));
  }
  return tree;
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes_[i].split_dim >= 0) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.split_dim)] < n.threshold ? n.left
                                                                                         : n.right);
  }
  return nodes_[i].value;
}

double Forest::predict(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& t : trees_) s += t.predict(x);
  return trees_.empty() ? 0.0 : s / static_cast<double>(trees_.size());
}

Forest fit_forest(const TrainingData& data, const ForestOptions& options, const Rng& rng) {
  if (data.size() < 2) {
    throw InsufficientDataError("forest needs at least 2 successful trials, have " +
                                std::to_string(data.size()));
  }
  if (options.n_trees < 1) throw DomainError("forest needs n_trees >= 1");
  std::vector<RegressionTree> trees(options.n_trees);
  std::vector<std::uint64_t> seeds(options.n_trees);
  parallel_for(options.n_trees, options.threads, [&](std::size_t t) {
    Rng tree_rng = rng.split("tree", t);
    seeds[t] = tree_rng.key();
    std::vector<std::size_t> rows(data.size());
    if (options.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(tree_rng.below(data.size()));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    trees[t] = RegressionTree::fit(data, rows);
  });
  return Forest(std::move(trees), std::move(seeds));
}

Forest fit_forest(std::span<const trials::RoundHistory> histories,
                  const hpspace::ConfigSpace& space, const ForestOptions& options,
                  const Rng& rng) {
  return fit_forest(training_data(histories, space), options, rng);
}

// --- marginals and decomposition ---------------------------------------------

double marginal(const RegressionTree& tree, std::span<const std::size_t> dims,
                std::span<const double> x) {
  double total = 0.0;
  for (const auto& leaf : tree.leaves()) {
    bool consistent = true;
    for (std::size_t k = 0; k < dims.size() && consistent; ++k) {
      const auto d = dims[k];
      const bool at_top = x[k] >= 1.0 && leaf.upper[d] >= 1.0;
      consistent = leaf.lower[d] <= x[k] && (x[k] < leaf.upper[d] || at_top);
    }
    if (!consistent) continue;
    double vol = 1.0;
    for (std::size_t d = 0; d < tree.dim(); ++d) {
      if (std::find(dims.begin(), dims.end(), d) == dims.end()) {
        vol *= leaf.upper[d] - leaf.lower[d];
      }
    }
    total += leaf.value * vol;
  }
  return total;
}

namespace {

struct Axis {
  std::vector<double> cuts;  // sorted breakpoints including 0 and 1

  std::size_t intervals() const { return cuts.size() - 1; }
  double width(std::size_t k) const { return cuts[k + 1] - cuts[k]; }
  std::size_t index(double v) const {
    return static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
  }
};

Axis axis_for(const RegressionTree& tree, std::size_t d) {
  Axis a;
  a.cuts = {0.0, 1.0};
  for (const auto& leaf : tree.leaves()) {
    a.cuts.push_back(leaf.lower[d]);
    a.cuts.push_back(leaf.upper[d]);
  }
  std::sort(a.cuts.begin(), a.cuts.end());
  a.cuts.erase(std::unique(a.cuts.begin(), a.cuts.end()), a.cuts.end());
  return a;
}

double complement_volume(const RegressionTree::Leaf& leaf, std::size_t skip_a,
                         std::size_t skip_b) {
  double v = 1.0;
  for (std::size_t d = 0; d < leaf.lower.size(); ++d) {
    if (d != skip_a && d != skip_b) v *= leaf.upper[d] - leaf.lower[d];
  }
  return v;
}

struct TreeDecomposition {
  double total = 0.0;
  std::vector<double> unary;
  std::vector<double> pairwise;  // upper triangle, row-major over i < j
};

TreeDecomposition decompose(const RegressionTree& tree, int max_order) {
  const std::size_t dim = tree.dim();
  TreeDecomposition out;
  out.unary.assign(dim, 0.0);
  if (max_order >= 2) out.pairwise.assign(dim * (dim - 1) / 2, 0.0);

  double f0 = 0.0;
  for (const auto& leaf : tree.leaves()) f0 += leaf.value * leaf.volume();
  for (const auto& leaf : tree.leaves()) {
    out.total += leaf.volume() * (leaf.value - f0) * (leaf.value - f0);
  }
  if (tree.leaves().size() < 2 || !(out.total > 0.0)) {
    out.total = 0.0;
    return out;
  }

  std::vector<Axis> axes;
  std::vector<std::vector<double>> main_effect(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    axes.push_back(axis_for(tree, i));
    const auto& ax = axes.back();
    std::vector<double> m(ax.intervals(), 0.0);
    for (const auto& leaf : tree.leaves()) {
      const double w = leaf.value * complement_volume(leaf, i, i);
      for (auto k = ax.index(leaf.lower[i]); k < ax.index(leaf.upper[i]); ++k) m[k] += w;
    }
    double v = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      m[k] -= f0;
      v += ax.width(k) * m[k] * m[k];
    }
    out.unary[i] = v;
    main_effect[i] = std::move(m);
  }

  if (max_order < 2) return out;
  std::size_t p = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i + 1; j < dim; ++j, ++p) {
      const auto& ai = axes[i];
      const auto& aj = axes[j];
      const auto ni = ai.intervals();
      const auto nj = aj.intervals();
      std::vector<double> m(ni * nj, 0.0);
      for (const auto& leaf : tree.leaves()) {
        const double w = leaf.value * complement_volume(leaf, i, j);
        const auto a0 = ai.index(leaf.lower[i]), a1 = ai.index(leaf.upper[i]);
        const auto b0 = aj.index(leaf.lower[j]), b1 = aj.index(leaf.upper[j]);
        for (auto a = a0; a < a1; ++a) {
          for (auto b = b0; b < b1; ++b) m[a * nj + b] += w;
        }
      }
      double v = 0.0;
      for (std::size_t a = 0; a < ni; ++a) {
        for (std::size_t b = 0; b < nj; ++b) {
          const double f = m[a * nj + b] - main_effect[i][a] - main_effect[j][b] - f0;
          v += ai.width(a) * aj.width(b) * f * f;
        }
      }
      out.pairwise[p] = v;
    }
  }
  return out;
}

double clamp_fraction(double f) { return std::clamp(f, 0.0, 1.0); }

ImportanceReport empty_report(const std::vector<std::string>& names, bool pairs) {
  ImportanceReport r;
  r.params = names;
  for (const auto& n : names) r.unary[n] = 0.0;
  if (pairs) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      for (std::size_t j = i + 1; j < names.size(); ++j) r.pairwise[{names[i], names[j]}] = 0.0;
    }
  }
  return r;
}

}  // namespace

ImportanceReport variance_decomposition(const Forest& forest, const hpspace::ConfigSpace& space,
                                        int max_order) {
  if (max_order != 1 && max_order != 2) throw DomainError("max_order must be 1 or 2");
  const auto names = space.names();
  const std::size_t dim = names.size();
  auto report = empty_report(names, max_order >= 2);
  if (forest.size() == 0) {
    report.degenerate = true;
    return report;
  }
  std::vector<double> unary(dim, 0.0);
  std::vector<double> pairwise(dim * (dim - 1) / 2, 0.0);
  std::size_t degenerate_trees = 0;
  double total = 0.0;
  for (const auto& tree : forest.trees()) {
    if (tree.dim() != dim) throw DomainError("forest dimension does not match the space");
    const auto dec = decompose(tree, max_order);
    total += dec.total;
    if (!(dec.total > 0.0)) {
      ++degenerate_trees;
      continue;
    }
    for (std::size_t i = 0; i < dim; ++i) unary[i] += dec.unary[i] / dec.total;
    for (std::size_t p = 0; p < dec.pairwise.size(); ++p) pairwise[p] += dec.pairwise[p] / dec.total;
  }
  const auto n = static_cast<double>(forest.size());
  report.total_variance = total / n;
  report.degenerate = degenerate_trees == forest.size();
  for (std::size_t i = 0; i < dim; ++i) report.unary[names[i]] = clamp_fraction(unary[i] / n);
  if (max_order >= 2) {
    std::size_t p = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = i + 1; j < dim; ++j, ++p) {
        report.pairwise[{names[i], names[j]}] = clamp_fraction(pairwise[p] / n);
      }
    }
  }
  return report;
}

// --- brute force -------------------------------------------------------------

std::size_t FactorialTable::cells() const {
  std::size_t c = 1;
  for (auto l : levels) c *= l;
  return c;
}

ImportanceReport importance_bruteforce(const FactorialTable& table, int max_order) {
  const std::size_t dim = table.levels.size();
  if (dim == 0 || dim > 6) throw DomainError("factorial table must have 1..6 dimensions");
  if (table.names.size() != dim) throw DomainError("factorial table: one name per dimension");
  for (auto l : table.levels) {
    if (l < 1 || l > 8) throw DomainError("factorial table: 1..8 levels per dimension");
  }
  const std::size_t cells = table.cells();
  if (table.values.size() != cells) {
    throw DomainError("factorial table: missing cells (have " +
                      std::to_string(table.values.size()) + " of " + std::to_string(cells) + ")");
  }
  for (std::size_t c = 0; c < cells; ++c) {
    if (!std::isfinite(table.values[c])) {
      throw DomainError("factorial table: missing cell " + std::to_string(c));
    }
  }

  std::vector<std::size_t> stride(dim, 1);
  for (std::size_t d = dim - 1; d-- > 0;) stride[d] = stride[d + 1] * table.levels[d + 1];
  auto level_of = [&](std::size_t cell, std::size_t d) {
    return (cell / stride[d]) % table.levels[d];
  };

  const auto n = static_cast<double>(cells);
  double f0 = 0.0;
  for (double v : table.values) f0 += v;
  f0 /= n;
  double total = 0.0;
  for (double v : table.values) total += (v - f0) * (v - f0);
  total /= n;

  auto report = empty_report(table.names, max_order >= 2);
  report.total_variance = total;
  if (std::all_of(table.values.begin(), table.values.end(),
                  [&](double v) { return v == table.values.front(); })) {
    report.total_variance = 0.0;
    report.degenerate = true;
    return report;
  }

  std::vector<std::vector<double>> main_effect(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    std::vector<double> m(table.levels[d], 0.0);
    for (std::size_t c = 0; c < cells; ++c) m[level_of(c, d)] += table.values[c];
    const double per_level = n / static_cast<double>(table.levels[d]);
    double v = 0.0;
    for (auto& x : m) {
      x = x / per_level - f0;
      v += x * x;
    }
    v /= static_cast<double>(table.levels[d]);
    report.unary[table.names[d]] = clamp_fraction(v / total);
    main_effect[d] = std::move(m);
  }
  if (max_order < 2) return report;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i + 1; j < dim; ++j) {
      const auto li = table.levels[i], lj = table.levels[j];
      std::vector<double> m(li * lj, 0.0);
      for (std::size_t c = 0; c < cells; ++c) {
        m[level_of(c, i) * lj + level_of(c, j)] += table.values[c];
      }
      const double per_cell = n / static_cast<double>(li * lj);
      double v = 0.0;
      for (std::size_t a = 0; a < li; ++a) {
        for (std::size_t b = 0; b < lj; ++b) {
          const double f = m[a * lj + b] / per_cell - main_effect[i][a] - main_effect[j][b] - f0;
          v += f * f;
        }
      }
      v /= static_cast<double>(li * lj);
      report.pairwise[{table.names[i], table.names[j]}] = clamp_fraction(v / total);
    }
  }
  return report;
}

// --- aggregation -------------------------------------------------------------

ImportanceReport aggregate_unary(std::span<const ImportanceReport> reports,
                                 std::span<const double> weights,
                                 const hpspace::ConfigSpace& space) {
  if (reports.size() != weights.size()) throw DomainError("one weight per report required");
  const auto names = space.names();
  auto out = empty_report(names, false);
  out.degenerate = true;
  double wsum = 0.0;
  for (std::size_t r = 0; r < reports.size(); ++r) {
    if (!(weights[r] >= 0.0)) throw DomainError("weights must be nonnegative");
    wsum += weights[r];
    if (!reports[r].degenerate) out.degenerate = false;
  }
  if (reports.empty() || !(wsum > 0.0)) return out;
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const double w = weights[r] / wsum;
    out.total_variance += w * reports[r].total_variance;
    for (const auto& n : names) {
      const auto it = reports[r].unary.find(n);
      if (it == reports[r].unary.end()) {
        throw DomainError("importance report lacks parameter '" + n + "'");
      }
      out.unary[n] += w * it->second;
    }
  }
  if (out.degenerate) {
    for (auto& [_, v] : out.unary) v = 0.0;
  }
  return out;
}

ImportanceReport get_param_imp(std::span<const trials::RoundHistory> histories,
                               const hpspace::ConfigSpace& space,
                               const ImportanceOptions& options) {
  std::vector<ImportanceReport> reports;
  std::vector<double> weights;
  for (const auto& h : histories) {
    if (h.empty()) throw DomainError("get_param_imp: empty round history");
    const auto data = training_data(std::span(&h, 1), space);
    weights.push_back(static_cast<double>(data.size()));
    const bool constant =
        data.size() < 2 || std::all_of(data.y.begin(), data.y.end(),
                                       [&](double v) { return v == data.y.front(); });
    if (constant) {
      auto r = empty_report(space.names(), false);
      r.degenerate = true;
      reports.push_back(std::move(r));
      continue;
    }
    const auto rng = Rng::derive(options.seed, "fanova", h.task_index());
    const auto forest = fit_forest(data, options.forest, rng);
    reports.push_back(variance_decomposition(forest, space, 1));
  }
  return aggregate_unary(reports, weights, space);
}

// --- serialization -----------------------------------------------------------

nlohmann::json ImportanceReport::to_json() const {
  nlohmann::json j;
  j["params"] = params;
  nlohmann::json u = nlohmann::json::object();
  for (const auto& p : params) u[p] = unary.count(p) ? unary.at(p) : 0.0;
  j["unary"] = std::move(u);
  nlohmann::json pw = nlohmann::json::array();
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = i + 1; k < params.size(); ++k) {
      const auto it = pairwise.find({params[i], params[k]});
      if (it != pairwise.end()) {
        pw.push_back({{"a", params[i]}, {"b", params[k]}, {"importance", it->second}});
      }
    }
  }
  j["pairwise"] = std::move(pw);
  j["total_variance"] = total_variance;
  j["degenerate"] = degenerate;
  return j;
}

ImportanceReport ImportanceReport::from_json(const nlohmann::json& j) {
  ImportanceReport r;
  r.params = j.at("params").get<std::vector<std::string>>();
  for (const auto& p : r.params) r.unary[p] = j.at("unary").at(p).get<double>();
  if (j.contains("pairwise")) {
    for (const auto& e : j.at("pairwise")) {
      r.pairwise[{e.at("a").get<std::string>(), e.at("b").get<std::string>()}] =
          e.at("importance").get<double>();
    }
  }
  r.total_variance = j.value("total_variance", 0.0);
  r.degenerate = j.value("degenerate", false);
  return r;
}

std::string ImportanceReport::to_csv() const {
  std::ostringstream os;
  os << "param,importance\n";
  for (const auto& p : params) {
    os << p << ',' << format_double(unary.count(p) ? unary.at(p) : 0.0) << '\n';
  }
  return os.str();
}

}  // namespace ahpo::fanova
