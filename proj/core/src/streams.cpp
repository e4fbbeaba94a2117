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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ahpo/clbench.hpp"
#include "ahpo/error.hpp"
#include "ahpo/format.hpp"

namespace ahpo::clbench {

void Split::add(std::span<const double> r, int label) {
  if (dim == 0 && x.empty()) dim = r.size();
  if (r.size() != dim) throw DomainError("split row has wrong dimension");
  x.insert(x.end(), r.begin(), r.end());
  y.push_back(label);
}

void Split::append(const Split& other) {
  if (other.empty()) return;
  if (empty() && x.empty()) dim = other.dim;
  if (other.dim != dim) throw DomainError("cannot append splits of different dimension");
  x.insert(x.end(), other.x.begin(), other.x.end());
  y.insert(y.end(), other.y.begin(), other.y.end());
}

std::string_view to_string(StreamKind k) {
  switch (k) {
    case StreamKind::rotated_moons_dil: return "rotated_moons_dil";
    case StreamKind::split_gaussians_cil: return "split_gaussians_cil";
    case StreamKind::drifting_function: return "drifting_function";
  }
  return "?";
}

StreamKind stream_kind_from_string(std::string_view s) {
  if (s == "rotated_moons_dil" || s == "rotated_moons") return StreamKind::rotated_moons_dil;
  if (s == "split_gaussians_cil" || s == "split_gaussians") return StreamKind::split_gaussians_cil;
  if (s == "drifting_function") return StreamKind::drifting_function;
  throw DomainError("unknown stream kind '" + std::string(s) + "'");
}

void StreamSpec::validate() const {
  if (n_tasks < 2) throw DomainError("stream needs n_tasks >= 2");
  if (kind != StreamKind::drifting_function && n_per_task < 10) {
    throw DomainError("stream needs n_per_task >= 10");
  }
  if (!(noise >= 0.0)) throw DomainError("noise must be >= 0");
  if (kind == StreamKind::split_gaussians_cil && feature_dim < 1) {
    throw DomainError("feature_dim must be >= 1");
  }
  if (kind == StreamKind::drifting_function && drift_dims < 1) {
    throw DomainError("drift_dims must be >= 1");
  }
}

nlohmann::json StreamSpec::to_json() const {
  nlohmann::json j{{"kind", std::string(to_string(kind))},
                   {"n_tasks", n_tasks},
                   {"seed", seed},
                   {"noise", noise}};
  switch (kind) {
    case StreamKind::rotated_moons_dil:
      j["n_per_task"] = n_per_task;
      break;
    case StreamKind::split_gaussians_cil:
      j["n_per_task"] = n_per_task;
      j["feature_dim"] = feature_dim;
      j["class_separation"] = class_separation;
      break;
    case StreamKind::drifting_function:
      j["drift_dims"] = drift_dims;
      j["drift_amplitude"] = drift_amplitude;
      break;
  }
  return j;
}

StreamSpec StreamSpec::from_json(const nlohmann::json& j) {
  StreamSpec s;
  s.kind = stream_kind_from_string(j.at("kind").get<std::string>());
  s.n_tasks = j.value("n_tasks", s.n_tasks);
  s.n_per_task = j.value("n_per_task", s.n_per_task);
  s.seed = j.value("seed", s.seed);
  s.noise = j.value("noise", s.kind == StreamKind::drifting_function ? 0.0 : s.noise);
  s.feature_dim = j.value("feature_dim", s.feature_dim);
  s.class_separation = j.value("class_separation", s.class_separation);
  s.drift_dims = j.value("drift_dims", s.drift_dims);
  s.drift_amplitude = j.value("drift_amplitude", s.drift_amplitude);
  s.validate();
  return s;
}

namespace {

void shuffle_rows(Split& s, Rng& rng) {
  for (std::size_t i = s.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(s.y[i - 1], s.y[j]);
    std::swap_ranges(s.x.begin() + static_cast<std::ptrdiff_t>((i - 1) * s.dim),
                     s.x.begin() + static_cast<std::ptrdiff_t>(i * s.dim),
                     s.x.begin() + static_cast<std::ptrdiff_t>(j * s.dim));
  }
}

// 10% assessment, then 15% of the remaining selection data for validation.
void split_task(const Split& all, Task& task) {
  const std::size_t n = all.size();
  const std::size_t n_test = std::max<std::size_t>(1, n / 10);
  const std::size_t n_sel = n - n_test;
  const std::size_t n_val =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.15 * static_cast<double>(n_sel))));
  task.train = Split{all.dim, {}, {}};
  task.val = Split{all.dim, {}, {}};
  task.test = Split{all.dim, {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    Split& dst = i < n_test ? task.test : (i < n_test + n_val ? task.val : task.train);
    dst.add(all.row(i), all.y[i]);
  }
}

Task moons_task(const StreamSpec& spec, std::size_t t) {
  Rng rng = Rng::derive(spec.seed, "moons", t);
  Task task;
  task.task_index = t;
  task.source_index = t;
  task.scenario = Scenario::domain_incremental;
  task.classes = {0, 1};
  task.rotation_degrees = static_cast<double>(t) * 180.0 / static_cast<double>(spec.n_tasks);
  const double angle = task.rotation_degrees * std::numbers::pi / 180.0;
  const double c = std::cos(angle), s = std::sin(angle);
  Split all{2, {}, {}};
  for (std::size_t i = 0; i < spec.n_per_task; ++i) {
    const int label = static_cast<int>(i % 2);
    const double theta = rng.uniform() * std::numbers::pi;
    double px = label == 0 ? std::cos(theta) : 1.0 - std::cos(theta);
    double py = label == 0 ? std::sin(theta) : 0.5 - std::sin(theta);
    px += spec.noise * rng.normal() - 0.5;
    py += spec.noise * rng.normal() - 0.25;
    const double row[2] = {c * px - s * py, s * px + c * py};
    all.add(row, label);
  }
  shuffle_rows(all, rng);
  split_task(all, task);
  return task;
}

std::vector<std::vector<double>> gaussian_means(const StreamSpec& spec) {
  Rng rng = Rng::derive(spec.seed, "class_means");
  std::vector<std::vector<double>> means(2 * spec.n_tasks, std::vector<double>(spec.feature_dim));
  for (auto& m : means) {
    for (auto& v : m) v = spec.class_separation * rng.normal();
  }
  return means;
}

Task gaussians_task(const StreamSpec& spec, std::size_t t,
                    const std::vector<std::vector<double>>& means) {
  Rng rng = Rng::derive(spec.seed, "gaussians", t);
  Task task;
  task.task_index = t;
  task.source_index = t;
  task.scenario = Scenario::class_incremental;
  task.classes = {static_cast<int>(2 * t), static_cast<int>(2 * t + 1)};
  Split all{spec.feature_dim, {}, {}};
  std::vector<double> row(spec.feature_dim);
  for (std::size_t i = 0; i < spec.n_per_task; ++i) {
    const int label = task.classes[i % 2];
    for (std::size_t d = 0; d < spec.feature_dim; ++d) {
      row[d] = means[static_cast<std::size_t>(label)][d] + rng.normal();
    }
    all.add(row, label);
  }
  shuffle_rows(all, rng);
  split_task(all, task);
  return task;
}

Task drifting_task(const StreamSpec& spec, std::size_t t, const std::vector<double>& phase) {
  Task task;
  task.task_index = t;
  task.source_index = t;
  task.optimum.resize(spec.drift_dims);
  for (std::size_t j = 0; j < spec.drift_dims; ++j) {
    const double arg = 2.0 * std::numbers::pi * static_cast<double>(t) /
                           static_cast<double>(spec.n_tasks) +
                       phase[j];
    task.optimum[j] = std::clamp(0.5 + spec.drift_amplitude * std::sin(arg), 0.0, 1.0);
  }
  return task;
}

}  // namespace

TaskStream make_stream(const StreamSpec& spec) {
  spec.validate();
  TaskStream stream;
  stream.spec = spec;
  switch (spec.kind) {
    case StreamKind::rotated_moons_dil:
      stream.input_dim = 2;
      stream.num_classes = 2;
      for (std::size_t t = 0; t < spec.n_tasks; ++t) stream.tasks.push_back(moons_task(spec, t));
      break;
    case StreamKind::split_gaussians_cil: {
      stream.input_dim = spec.feature_dim;
      stream.num_classes = 2 * spec.n_tasks;
      const auto means = gaussian_means(spec);
      for (std::size_t t = 0; t < spec.n_tasks; ++t) {
        stream.tasks.push_back(gaussians_task(spec, t, means));
      }
      break;
    }
    case StreamKind::drifting_function: {
      Rng rng = Rng::derive(spec.seed, "drift_phase");
      std::vector<double> phase(spec.drift_dims);
      for (auto& p : phase) p = 2.0 * std::numbers::pi * rng.uniform();
      for (std::size_t t = 0; t < spec.n_tasks; ++t) {
        stream.tasks.push_back(drifting_task(spec, t, phase));
      }
      break;
    }
  }
  return stream;
}

TaskStream permute(const TaskStream& stream, std::span<const std::size_t> order) {
  if (order.size() != stream.size()) throw DomainError("permutation length mismatch");
  std::set<std::size_t> seen(order.begin(), order.end());
  if (seen.size() != order.size() || *seen.rbegin() >= stream.size()) {
    throw DomainError("not a permutation of the task indices");
  }
  TaskStream out;
  out.spec = stream.spec;
  out.input_dim = stream.input_dim;
  out.num_classes = stream.num_classes;
  for (std::size_t i = 0; i < order.size(); ++i) {
    Task t = stream.tasks[order[i]];
    t.task_index = i;
    out.tasks.push_back(std::move(t));
  }
  return out;
}

void dump_csv(const TaskStream& stream, const std::filesystem::path& path) {
  std::ostringstream os;
  for (std::size_t d = 0; d < stream.input_dim; ++d) os << 'x' << d << ',';
  os << "label,task_index,split\n";
  for (const auto& task : stream.tasks) {
    const std::pair<const Split*, const char*> parts[] = {
        {&task.train, "train"}, {&task.val, "val"}, {&task.test, "test"}};
    for (const auto& [split, name] : parts) {
      for (std::size_t i = 0; i < split->size(); ++i) {
        for (double v : split->row(i)) os << format_double(v) << ',';
        os << split->y[i] << ',' << task.task_index << ',' << name << '\n';
      }
    }
  }
  write_text_file(path, os.str());
}

double drifting_objective(const Task& task, std::span<const double> unit) {
  if (unit.size() != task.optimum.size()) {
    throw DomainError("drifting objective: dimension mismatch");
  }
  double num = 0.0, den = 0.0, w = 1.0;
  for (std::size_t j = 0; j < unit.size(); ++j, w *= 0.5) {
    const double diff = unit[j] - task.optimum[j];
    num += w * diff * diff;
    den += w;
  }
  return 1.0 - num / den;
}

hpspace::ConfigSpace drifting_space(std::size_t dims) {
  std::vector<hpspace::ParamSpec> params;
  for (std::size_t j = 0; j < dims; ++j) {
    params.push_back(hpspace::ParamSpec::linear("x" + std::to_string(j), 0.0, 1.0, 0.5));
  }
  return hpspace::ConfigSpace(std::move(params));
}

}  // namespace ahpo::clbench
