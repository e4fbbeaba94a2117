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
#include <cctype>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "ahpo/clbench.hpp"
#include "ahpo/error.hpp"

namespace ahpo::clbench {

std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::naive: return "naive";
    case StrategyKind::er: return "er";
    case StrategyKind::gdumb: return "gdumb";
    case StrategyKind::der: return "der";
    case StrategyKind::lwf: return "lwf";
    case StrategyKind::si: return "si";
  }
  return "?";
}

StrategyKind strategy_kind_from_string(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "naive") return StrategyKind::naive;
  if (lower == "er" || lower == "replay") return StrategyKind::er;
  if (lower == "gdumb") return StrategyKind::gdumb;
  if (lower == "der" || lower == "der++") return StrategyKind::der;
  if (lower == "lwf") return StrategyKind::lwf;
  if (lower == "si") return StrategyKind::si;
  throw DomainError("unknown strategy '" + std::string(s) + "'");
}

void StrategyConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw DomainError("lr must be finite and >= 0");
  if (!(weight_decay >= 0.0)) throw DomainError("weight_decay must be >= 0");
  if (epochs < 1) throw DomainError("epochs must be >= 1");
  if (batch_size < 1) throw DomainError("batch_size must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw DomainError("dropout must lie in [0, 1)");
  if (!(alpha >= 0.0)) throw DomainError("alpha must be >= 0");
  if (!(beta >= 0.0)) throw DomainError("beta must be >= 0");
  if (!(temperature > 0.0)) throw DomainError("temperature must be > 0");
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  if (!(eps > 0.0)) throw DomainError("eps must be > 0");
  if (patience < 1) throw DomainError("patience must be >= 1");
}

StrategyConfig StrategyConfig::from_configuration(StrategyConfig base,
                                                  const hpspace::Configuration& config) {
  auto count = [&](const std::string& name) -> std::size_t {
    const auto& v = config.at(name);
    if (const auto* s = std::get_if<std::string>(&v)) return std::stoul(*s);
    const double d = config.number(name);
    if (d < 0.0) throw DomainError("parameter '" + name + "' must be nonnegative");
    return static_cast<std::size_t>(std::llround(d));
  };
  for (const auto& [name, _] : config.values()) {
    if (name == "lr") base.lr = config.number(name);
    else if (name == "weight_decay") base.weight_decay = config.number(name);
    else if (name == "epochs") base.epochs = count(name);
    else if (name == "batch_size") base.batch_size = count(name);
    else if (name == "dropout") base.dropout = config.number(name);
    else if (name == "mem_size") base.mem_size = count(name);
    else if (name == "alpha") base.alpha = config.number(name);
    else if (name == "beta") base.beta = config.number(name);
    else if (name == "temperature") base.temperature = config.number(name);
    else if (name == "lambda") base.lambda = config.number(name);
    else if (name == "eps") base.eps = config.number(name);
    else throw DomainError("parameter '" + name + "' is not a strategy hyperparameter");
  }
  base.validate();
  return base;
}

nlohmann::json StrategyConfig::to_json() const {
  return nlohmann::json{{"kind", std::string(to_string(kind))},
                        {"lr", lr},
                        {"weight_decay", weight_decay},
                        {"epochs", epochs},
                        {"batch_size", batch_size},
                        {"dropout", dropout},
                        {"mem_size", mem_size},
                        {"alpha", alpha},
                        {"beta", beta},
                        {"temperature", temperature},
                        {"lambda", lambda},
                        {"eps", eps},
                        {"patience", patience}};
}

StrategyConfig StrategyConfig::from_json(const nlohmann::json& j) {
  StrategyConfig s;
  s.kind = strategy_kind_from_string(j.at("kind").get<std::string>());
  s.lr = j.value("lr", s.lr);
  s.weight_decay = j.value("weight_decay", s.weight_decay);
  s.epochs = j.value("epochs", s.epochs);
  s.batch_size = j.value("batch_size", s.batch_size);
  s.dropout = j.value("dropout", s.dropout);
  s.mem_size = j.value("mem_size", s.mem_size);
  s.alpha = j.value("alpha", s.alpha);
  s.beta = j.value("beta", s.beta);
  s.temperature = j.value("temperature", s.temperature);
  s.lambda = j.value("lambda", s.lambda);
  s.eps = j.value("eps", s.eps);
  s.patience = j.value("patience", s.patience);
  s.validate();
  return s;
}

hpspace::ConfigSpace default_space(StrategyKind kind) {
  using hpspace::ParamSpec;
  std::vector<ParamSpec> p = {
      ParamSpec::log("lr", 1e-4, 1e-1, 1e-2),
      ParamSpec::log("weight_decay", 1e-6, 1e-1, 1e-4),
      ParamSpec::integer("epochs", 1, 20, 5),
      ParamSpec::categorical("batch_size", {"16", "32", "64"}, "32"),
      ParamSpec::linear("dropout", 0.0, 0.5, 0.0),
  };
  switch (kind) {
    case StrategyKind::naive:
      break;
    case StrategyKind::er:
    case StrategyKind::gdumb:
      p.push_back(ParamSpec::integer("mem_size", 20, 500, 200));
      break;
    case StrategyKind::der:
      p.push_back(ParamSpec::integer("mem_size", 20, 500, 200));
      p.push_back(ParamSpec::linear("alpha", 0.0, 1.0, 0.5));
      p.push_back(ParamSpec::linear("beta", 0.0, 1.0, 0.5));
      break;
    case StrategyKind::lwf:
      p.push_back(ParamSpec::linear("alpha", 0.0, 2.0, 1.0));
      p.push_back(ParamSpec::linear("temperature", 0.5, 4.0, 2.0));
      break;
    case StrategyKind::si:
      p.push_back(ParamSpec::log("lambda", 1e-3, 1e2, 1.0));
      p.push_back(ParamSpec::log("eps", 1e-4, 1.0, 1e-3));
      break;
  }
  return hpspace::ConfigSpace(std::move(p));
}

LearnerState initial_learner(std::size_t input_dim, std::size_t num_classes,
                             const ModelSpec& model, Rng& rng) {
  LearnerState s;
  s.model = MLPModel(input_dim, model.hidden1, model.hidden2, num_classes);
  s.model.initialize(rng);
  s.buffer = ReplayBuffer(0, input_dim);
  const auto n = s.model.num_params();
  s.si.omega.assign(n, 0.0);
  s.si.importance.assign(n, 0.0);
  s.si.anchor.assign(s.model.params().begin(), s.model.params().end());
  s.si.task_start = s.si.anchor;
  return s;
}

// --- losses ------------------------------------------------------------------

namespace {

void softmax_row(const double* z, double* p, std::size_t c, double inv_t) {
  double m = z[0] * inv_t;
  for (std::size_t k = 1; k < c; ++k) m = std::max(m, z[k] * inv_t);
  double s = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    p[k] = std::exp(z[k] * inv_t - m);
    s += p[k];
  }
  for (std::size_t k = 0; k < c; ++k) p[k] /= s;
}

// Mean cross-entropy; adds scale * dL/dlogits into `dlogits`.
double cross_entropy(const std::vector<double>& logits, const std::vector<int>& y, std::size_t c,
                     double scale, std::vector<double>* dlogits) {
  const std::size_t b = y.size();
  std::vector<double> p(c);
  double loss = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double* z = logits.data() + i * c;
    softmax_row(z, p.data(), c, 1.0);
    const auto yi = static_cast<std::size_t>(y[i]);
    double m = z[0];
    for (std::size_t k = 1; k < c; ++k) m = std::max(m, z[k]);
    double lse = 0.0;
    for (std::size_t k = 0; k < c; ++k) lse += std::exp(z[k] - m);
    loss += m + std::log(lse) - z[yi];
    if (dlogits != nullptr) {
      for (std::size_t k = 0; k < c; ++k) {
        (*dlogits)[i * c + k] += scale * (p[k] - (k == yi ? 1.0 : 0.0)) / static_cast<double>(b);
      }
    }
  }
  return scale * loss / static_cast<double>(b);
}

// Mean squared error over every logit.
double logit_mse(const std::vector<double>& logits, const std::vector<double>& target,
                 double scale, std::vector<double>* dlogits) {
  const auto n = static_cast<double>(logits.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double d = logits[i] - target[i];
    loss += d * d;
    if (dlogits != nullptr) (*dlogits)[i] += scale * 2.0 * d / n;
  }
  return scale * loss / n;
}

// scale * T^2 * mean_b KL(softmax(teacher/T) || softmax(student/T)).
double distillation(const std::vector<double>& student, const std::vector<double>& teacher,
                    std::size_t c, double temperature, double scale,
                    std::vector<double>* dlogits) {
  const std::size_t b = student.size() / c;
  const double inv_t = 1.0 / temperature;
  std::vector<double> p(c), q(c);
  double loss = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    softmax_row(teacher.data() + i * c, p.data(), c, inv_t);
    softmax_row(student.data() + i * c, q.data(), c, inv_t);
    for (std::size_t k = 0; k < c; ++k) {
      if (p[k] > 0.0) loss += p[k] * (std::log(p[k]) - std::log(q[k]));
      if (dlogits != nullptr) {
        (*dlogits)[i * c + k] +=
            scale * temperature * (q[k] - p[k]) / static_cast<double>(b);
      }
    }
  }
  return scale * temperature * temperature * loss / static_cast<double>(b);
}

double term_with_backward(const MLPModel& model, const Split& data, Rng* dropout_rng,
                          std::vector<double>* grad,
                          const std::function<double(const std::vector<double>&,
                                                     std::vector<double>*)>& term) {
  MLPModel::Cache cache;
  model.forward(data.x, data.size(), cache, dropout_rng);
  std::vector<double> dlogits;
  if (grad != nullptr) dlogits.assign(cache.logits.size(), 0.0);
  const double loss = term(cache.logits, grad != nullptr ? &dlogits : nullptr);
  if (grad != nullptr) model.backward(cache, dlogits, *grad);
  return loss;
}

}  // namespace

double strategy_loss(const MLPModel& model, const StrategyConfig& strategy,
                     const LossBatch& batch, const MLPModel* teacher, const SIState* si,
                     std::vector<double>* grad, Rng* dropout_rng) {
  if (grad != nullptr && grad->size() != model.num_params()) grad->assign(model.num_params(), 0.0);
  const std::size_t c = model.output_dim();
  double loss = 0.0;

  if (strategy.kind == StrategyKind::er && !batch.replay.empty()) {
    Split joint = batch.current;
    joint.append(batch.replay);
    return term_with_backward(model, joint, dropout_rng, grad, [&](const auto& z, auto* dz) {
      return cross_entropy(z, joint.y, c, 1.0, dz);
    });
  }

  const bool distill = strategy.kind == StrategyKind::lwf && teacher != nullptr &&
                       strategy.alpha > 0.0;
  std::vector<double> teacher_logits;
  if (distill) teacher_logits = teacher->logits(batch.current.x, batch.current.size());
  if (!batch.current.empty()) {
    loss += term_with_backward(model, batch.current, dropout_rng, grad,
                               [&](const auto& z, auto* dz) {
                                 double l = cross_entropy(z, batch.current.y, c, 1.0, dz);
                                 if (distill) {
                                   l += distillation(z, teacher_logits, c, strategy.temperature,
                                                     strategy.alpha, dz);
                                 }
                                 return l;
                               });
  }

  if (strategy.kind == StrategyKind::der) {
    if (strategy.alpha > 0.0 && !batch.replay.empty()) {
      loss += term_with_backward(model, batch.replay, dropout_rng, grad,
                                 [&](const auto& z, auto* dz) {
                                   return logit_mse(z, batch.replay_logits, strategy.alpha, dz);
                                 });
    }
    if (strategy.beta > 0.0 && !batch.replay_labels.empty()) {
      loss += term_with_backward(model, batch.replay_labels, dropout_rng, grad,
                                 [&](const auto& z, auto* dz) {
                                   return cross_entropy(z, batch.replay_labels.y, c,
                                                        strategy.beta, dz);
                                 });
    }
  }

  if (strategy.kind == StrategyKind::si && si != nullptr && strategy.lambda > 0.0 &&
      !si->importance.empty()) {
    const auto theta = model.params();
    double pen = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double d = theta[i] - si->anchor[i];
      pen += si->importance[i] * d * d;
      if (grad != nullptr) (*grad)[i] += 2.0 * strategy.lambda * si->importance[i] * d;
    }
    loss += strategy.lambda * pen;
  }
  return loss;
}

GradCheckResult grad_check(const MLPModel& model, const StrategyConfig& strategy,
                           const LossBatch& batch, const MLPModel* teacher, const SIState* si) {
  constexpr double kStep = 1e-4;
  MLPModel probe = model;
  probe.set_dropout(0.0);
  std::vector<double> analytic(probe.num_params(), 0.0);
  strategy_loss(probe, strategy, batch, teacher, si, &analytic, nullptr);

  const Split* inputs[] = {&batch.current, &batch.replay, &batch.replay_labels};
  auto patterns = [&](const MLPModel& m) {
    std::vector<std::vector<bool>> out;
    for (const auto* s : inputs) {
      out.push_back(s->empty() ? std::vector<bool>{} : m.activation_pattern(s->x, s->size()));
    }
    return out;
  };
  const auto base = patterns(probe);

  GradCheckResult result;
  auto theta = probe.params();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + kStep;
    const double up = strategy_loss(probe, strategy, batch, teacher, si, nullptr, nullptr);
    const bool kink_up = patterns(probe) != base;
    theta[i] = saved - kStep;
    const double down = strategy_loss(probe, strategy, batch, teacher, si, nullptr, nullptr);
    const bool kink_down = patterns(probe) != base;
    theta[i] = saved;
    if (kink_up || kink_down) {
      ++result.skipped_kinks;
      continue;
    }
    const double numeric = (up - down) / (2.0 * kStep);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    result.max_relative_error =
        std::max(result.max_relative_error, std::abs(analytic[i] - numeric) / denom);
    ++result.checked;
  }
  return result;
}

// --- training ----------------------------------------------------------------

namespace {

Split gather(const Split& src, std::span<const std::size_t> rows) {
  Split out{src.dim, {}, {}};
  out.x.reserve(rows.size() * src.dim);
  out.y.reserve(rows.size());
  for (auto r : rows) out.add(src.row(r), src.y[r]);
  return out;
}

Split gather(const ReplayBuffer& buf, std::span<const std::size_t> rows,
             std::vector<double>* logits) {
  Split out{buf.dim(), {}, {}};
  for (auto r : rows) {
    out.add(buf.x(r), buf.y(r));
    if (logits != nullptr) {
      const auto l = buf.logits(r);
      logits->insert(logits->end(), l.begin(), l.end());
    }
  }
  return out;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

TrainResult train_task(LearnerState state, const StrategyConfig& strategy, const Task& task,
                       const Split& val, std::size_t num_classes, Rng rng) {
  strategy.validate();
  if (task.train.empty()) throw DomainError("train_task: empty training split");
  if (task.train.dim != state.model.input_dim()) {
    throw DomainError("train_task: task feature dimension does not match the model");
  }
  if (state.model.output_dim() < num_classes) {
    throw DomainError("train_task: model has fewer outputs than classes");
  }
  Rng shuffle_rng = rng.split("shuffle");
  Rng dropout_rng = rng.split("dropout");
  Rng replay_rng = rng.split("replay");
  Rng memory_rng = rng.split("memory");

  auto& model = state.model;
  model.set_dropout(strategy.dropout);
  model.reset_optimizer();
  const MLPModel::AdamW opt{strategy.lr, strategy.weight_decay};
  const bool replays = strategy.kind == StrategyKind::er || strategy.kind == StrategyKind::der;
  const bool is_si = strategy.kind == StrategyKind::si;

  const Split* train = &task.train;
  Split gdumb_data;
  if (strategy.kind == StrategyKind::gdumb) {
    state.buffer.set_capacity(strategy.mem_size);
    for (std::size_t i = 0; i < task.train.size(); ++i) {
      state.buffer.balanced_add(task.train.row(i), task.train.y[i], memory_rng);
    }
    Rng init_rng = rng.split("reinit");
    model.initialize(init_rng);
    gdumb_data = state.buffer.as_split();
    train = &gdumb_data;
  } else if (replays) {
    state.buffer.set_capacity(strategy.mem_size);
  }
  if (is_si) {
    const auto theta = model.params();
    state.si.task_start.assign(theta.begin(), theta.end());
    state.si.omega.assign(theta.size(), 0.0);
    if (state.si.importance.size() != theta.size()) state.si.importance.assign(theta.size(), 0.0);
    if (state.si.anchor.size() != theta.size()) state.si.anchor.assign(theta.begin(), theta.end());
  }
  const MLPModel* teacher =
      strategy.kind == StrategyKind::lwf && state.teacher ? &*state.teacher : nullptr;

  TrainResult result;
  double best_val = -1.0;
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train->size());
  std::vector<double> grad(model.num_params());
  std::vector<double> before;

  for (std::size_t epoch = 0; epoch < strategy.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.below(i))]);
    }
    for (std::size_t start = 0; start < order.size(); start += strategy.batch_size) {
      const auto end = std::min(order.size(), start + strategy.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      LossBatch lb;
      lb.current = gather(*train, rows);
      if (replays && !state.buffer.empty()) {
        const bool want_replay =
            strategy.kind == StrategyKind::er || strategy.alpha > 0.0;
        if (want_replay) {
          const auto idx = state.buffer.sample(rows.size(), replay_rng);
          lb.replay = gather(state.buffer, idx,
                             strategy.kind == StrategyKind::der ? &lb.replay_logits : nullptr);
        }
        if (strategy.kind == StrategyKind::der && strategy.beta > 0.0) {
          const auto idx = state.buffer.sample(rows.size(), replay_rng);
          lb.replay_labels = gather(state.buffer, idx, nullptr);
        }
      }
      std::vector<double> stored_logits;
      if (strategy.kind == StrategyKind::der && epoch == 0 && strategy.mem_size > 0) {
        stored_logits = model.logits(lb.current.x, lb.current.size());
      }

      std::fill(grad.begin(), grad.end(), 0.0);
      const double loss =
          strategy_loss(model, strategy, lb, teacher, &state.si, &grad, &dropout_rng);
      if (!std::isfinite(loss)) {
        throw TrainingDiverged("non-finite loss at task " + std::to_string(task.task_index) +
                               ", epoch " + std::to_string(epoch));
      }
      if (is_si) before.assign(model.params().begin(), model.params().end());
      model.adamw_step(grad, opt);
      if (is_si) {
        const auto theta = model.params();
        for (std::size_t i = 0; i < theta.size(); ++i) {
          state.si.omega[i] += -grad[i] * (theta[i] - before[i]);
        }
      }

      if (replays && epoch == 0 && strategy.mem_size > 0) {
        const std::size_t c = model.output_dim();
        for (std::size_t r = 0; r < lb.current.size(); ++r) {
          std::span<const double> l;
          if (!stored_logits.empty()) l = {stored_logits.data() + r * c, c};
          state.buffer.reservoir_add(lb.current.row(r), lb.current.y[r], l, memory_rng);
        }
      }
    }
    if (!all_finite(model.params())) {
      throw TrainingDiverged("non-finite parameters at task " + std::to_string(task.task_index));
    }
    result.epochs_run = epoch + 1;
    const double acc = eval_accuracy(model, val);
    if (acc > best_val) {
      best_val = acc;
      since_best = 0;
    } else if (++since_best >= strategy.patience) {
      break;
    }
  }

  if (strategy.kind == StrategyKind::lwf) {
    MLPModel t = model;
    t.reset_optimizer();
    state.teacher = std::move(t);
  }
  if (is_si) {
    const auto theta = model.params();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double delta = theta[i] - state.si.task_start[i];
      state.si.importance[i] += state.si.omega[i] / (delta * delta + strategy.eps);
      state.si.anchor[i] = theta[i];
    }
    std::fill(state.si.omega.begin(), state.si.omega.end(), 0.0);
  }
  ++state.tasks_seen;
  result.val_accuracy = eval_accuracy(model, val);
  result.state = std::move(state);
  return result;
}

}  // namespace ahpo::clbench
