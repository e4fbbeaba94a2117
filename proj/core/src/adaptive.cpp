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


#include "ahpo/adaptive.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "ahpo/error.hpp"
#include "ahpo/format.hpp"
#include "ahpo/parallel.hpp"

namespace ahpo::adaptive {

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::fixed_random: return "fixed_random";
    case PolicyKind::fixed_first_hpo: return "fixed_first_hpo";
    case PolicyKind::per_task_hpo: return "per_task_hpo";
    case PolicyKind::adaptive_hpo: return "adaptive_hpo";
  }
  return "?";
}

PolicyKind policy_kind_from_string(std::string_view s) {
  if (s == "fixed_random") return PolicyKind::fixed_random;
  if (s == "fixed_first_hpo") return PolicyKind::fixed_first_hpo;
  if (s == "per_task_hpo") return PolicyKind::per_task_hpo;
  if (s == "adaptive_hpo") return PolicyKind::adaptive_hpo;
  throw DomainError("unknown policy '" + std::string(s) + "'");
}

void TunerPolicy::validate(std::size_t num_tasks) const {
  if (budget_full < 1) throw DomainError("budget_full must be >= 1");
  if (kind != PolicyKind::adaptive_hpo) return;
  if (m < 1) throw DomainError("m must be >= 1");
  if (num_tasks != 0 && m >= num_tasks) {
    throw DomainError("m must be smaller than the number of tasks");
  }
  if (k < 1) throw DomainError("k must be >= 1");
  if (budget_restricted < 1) throw DomainError("budget_restricted must be >= 1");
  if (budget_restricted > budget_full) {
    throw DomainError("budget_restricted must not exceed budget_full");
  }
  if (importance_mass && !(*importance_mass > 0.0 && *importance_mass <= 1.0)) {
    throw DomainError("importance_mass must lie in (0, 1]");
  }
}

nlohmann::json TunerPolicy::to_json() const {
  nlohmann::json j{{"kind", std::string(to_string(kind))},
                   {"m", m},
                   {"k", k},
                   {"budget_full", budget_full},
                   {"budget_restricted", budget_restricted}};
  j["importance_mass"] = importance_mass ? nlohmann::json(*importance_mass) : nlohmann::json();
  return j;
}

TunerPolicy TunerPolicy::from_json(const nlohmann::json& j) {
  TunerPolicy p;
  p.kind = policy_kind_from_string(j.at("kind").get<std::string>());
  p.m = j.value("m", p.m);
  p.k = j.value("k", p.k);
  p.budget_full = j.value("budget_full", p.budget_full);
  p.budget_restricted = j.value("budget_restricted", p.budget_restricted);
  if (j.contains("importance_mass") && !j.at("importance_mass").is_null()) {
    p.importance_mass = j.at("importance_mass").get<double>();
  }
  p.validate();
  return p;
}

std::size_t predicted_budget(const TunerPolicy& policy, std::size_t num_tasks) {
  policy.validate(num_tasks);
  const std::size_t t = num_tasks;
  switch (policy.kind) {
    case PolicyKind::fixed_random: return t;
    case PolicyKind::fixed_first_hpo: return t == 0 ? 0 : policy.budget_full + t - 1;
    case PolicyKind::per_task_hpo: return policy.budget_full * t;
    case PolicyKind::adaptive_hpo:
      return policy.m * policy.budget_full + (t - policy.m) * policy.budget_restricted;
  }
  return 0;
}

RoundOutcome hpo_round(const ContinualProblem& problem, const Learner& learner,
                       std::size_t task, const hpspace::Subspace& domain,
                       const samplers::SamplerSpec& sampler, std::size_t budget,
                       const std::vector<hpspace::Configuration>& warm_start,
                       std::uint64_t master_seed, const RoundOptions& options) {
  if (budget < 1) throw DomainError("hpo_round: budget must be >= 1");
  sampler.validate();
  for (const auto& w : warm_start) {
    if (!domain.contains(w)) throw DomainError("hpo_round: warm start outside the search domain");
  }

  RoundOutcome out{trials::RoundHistory(task, domain), 0, nullptr, {}};
  double best = -std::numeric_limits<double>::infinity();

  auto run_wave = [&](const std::vector<hpspace::Configuration>& configs) {
    const std::size_t base = out.history.size();
    std::vector<trials::Trial> done(configs.size());
    std::vector<LearnerPtr> learners(configs.size());
    std::vector<std::string> errors(configs.size());
    parallel_for(configs.size(), options.threads, [&](std::size_t i) {
      auto& t = done[i];
      t.trial_id = base + i;
      t.task_index = task;
      t.config = configs[i];
      t.seed = Rng::derive(master_seed, "trial", task, t.trial_id).key();
      const auto start = std::chrono::steady_clock::now();
      try {
        auto r = problem.train(learner, task, t.config, t.seed);
        if (!std::isfinite(r.objective)) throw TrainingDiverged("non-finite objective");
        t.objective = r.objective;
        learners[i] = std::move(r.learner);
      } catch (const std::exception& e) {
        t.status = trials::TrialStatus::failed;
        t.objective = std::numeric_limits<double>::quiet_NaN();
        errors[i] = e.what();
      }
      t.cost_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });
    for (std::size_t i = 0; i < done.size(); ++i) {
      if (done[i].ok() && done[i].objective > best) {
        best = done[i].objective;
        out.best_id = done[i].trial_id;
        out.learner = learners[i];
      }
      if (!done[i].ok()) {
        out.failures.push_back("task " + std::to_string(task) + " trial " +
                               std::to_string(done[i].trial_id) + " failed: " + errors[i]);
      }
      out.history.append(std::move(done[i]));
    }
  };

  if (!warm_start.empty()) {
    const auto n = std::min(budget, warm_start.size());
    run_wave({warm_start.begin(), warm_start.begin() + static_cast<std::ptrdiff_t>(n)});
  }
  for (std::uint64_t wave = 0; out.history.size() < budget; ++wave) {
    const auto want = std::min(sampler.batch_size, budget - out.history.size());
    auto rng = Rng::derive(master_seed, "ask", task, wave);
    auto configs = samplers::ask_batch(sampler, domain, out.history, want, rng);
    if (configs.empty()) break;
    run_wave(configs);
  }
  if (!out.learner) {
    throw EmptyRoundError("every trial of the round for task " + std::to_string(task) +
                          " failed");
  }
  return out;
}

// --- sequence ----------------------------------------------------------------

double SequenceResult::final_stream_accuracy() const {
  return tasks.empty() ? 0.0 : tasks.back().stream_accuracy;
}

std::size_t SequenceResult::total_trials() const {
  std::size_t n = 0;
  for (const auto& t : tasks) n += t.trials;
  return n;
}

double SequenceResult::total_cost_seconds() const {
  double s = 0.0;
  for (const auto& t : tasks) s += t.cost_seconds;
  return s;
}

namespace {

nlohmann::json config_json(const hpspace::Configuration& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, v] : c.values()) {
    std::visit([&, n = name](const auto& x) { j[n] = x; }, v);
  }
  return j;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

nlohmann::json SequenceResult::to_json() const {
  nlohmann::json j;
  j["problem"] = problem;
  j["policy"] = policy.to_json();
  j["sampler"] = sampler.to_json();
  j["master_seed"] = master_seed;
  j["space"] = space.to_json();
  nlohmann::json ts = nlohmann::json::array();
  nlohmann::json matrix = nlohmann::json::array();
  nlohmann::json curve = nlohmann::json::array();
  nlohmann::json costs = nlohmann::json::array();
  for (const auto& t : tasks) {
    ts.push_back({{"task_index", t.task_index},
                  {"best_config", config_json(t.best_config)},
                  {"best_objective", t.best_objective},
                  {"trials", t.trials},
                  {"failed", t.failed},
                  {"free_params", t.free_params},
                  {"accuracies", t.accuracies},
                  {"stream_accuracy", t.stream_accuracy}});
    matrix.push_back(t.accuracies);
    curve.push_back(t.stream_accuracy);
    costs.push_back(t.cost_seconds);
  }
  j["tasks"] = std::move(ts);
  j["accuracy_matrix"] = std::move(matrix);
  j["sa_curve"] = std::move(curve);
  j["final_stream_accuracy"] = final_stream_accuracy();
  j["total_trials"] = total_trials();
  j["predicted_trials"] = predicted_budget(policy, num_tasks);
  j["restricted_params"] = restricted_params;
  nlohmann::json imp = nlohmann::json::array();
  for (const auto& [t, r] : importance) imp.push_back({{"task_index", t}, {"report", r.to_json()}});
  j["importance"] = std::move(imp);
  j["warnings"] = warnings;
  j["partial"] = partial;
  j["error"] = error;
  j["timing"] = {{"total_cost_seconds", total_cost_seconds()},
                 {"task_cost_seconds", std::move(costs)},
                 {"wall_seconds", wall_seconds}};
  return j;
}

SequenceResult run_sequence(const ContinualProblem& problem, const TunerPolicy& policy,
                            const samplers::SamplerSpec& sampler, std::uint64_t master_seed,
                            const SequenceOptions& options) {
  const auto wall_start = std::chrono::steady_clock::now();
  const std::size_t n_tasks = problem.num_tasks();
  if (n_tasks < 2) throw DomainError("run_sequence: stream needs at least 2 tasks");
  policy.validate(n_tasks);
  sampler.validate();

  SequenceResult res;
  res.problem = problem.describe();
  res.policy = policy;
  res.sampler = sampler;
  res.master_seed = master_seed;
  res.space = problem.space();
  res.num_tasks = n_tasks;

  const auto full = hpspace::Subspace::full(res.space);
  LearnerPtr learner = problem.initial_learner(master_seed);
  std::optional<hpspace::Configuration> fixed;  // fixed policies
  std::optional<hpspace::Configuration> prev_best;
  std::vector<std::string> restricted;

  for (std::size_t t = 0; t < n_tasks; ++t) {
    hpspace::Subspace domain = full;
    std::size_t budget = policy.budget_full;
    std::vector<hpspace::Configuration> warm;
    switch (policy.kind) {
      case PolicyKind::fixed_random:
        if (t == 0) {
          auto rng = Rng::derive(master_seed, "fixed_random");
          fixed = hpspace::sample_uniform(res.space, rng);
        }
        budget = 1;
        warm = {*fixed};
        break;
      case PolicyKind::fixed_first_hpo:
        if (t > 0) {
          budget = 1;
          warm = {*fixed};
        }
        break;
      case PolicyKind::per_task_hpo:
        if (prev_best) warm = {*prev_best};
        break;
      case PolicyKind::adaptive_hpo:
        if (t >= policy.m) {
          domain = hpspace::Subspace(res.space, restricted, *prev_best);
          budget = policy.budget_restricted;
          warm = {*prev_best};
        }
        break;
    }

    RoundOutcome round;
    try {
      round = hpo_round(problem, *learner, t, domain, sampler, budget, warm, master_seed,
                        {options.threads});
    } catch (const EmptyRoundError& e) {
      res.partial = true;
      res.error = e.what();
      res.warnings.push_back(e.what());
      break;
    }
    res.warnings.insert(res.warnings.end(), round.failures.begin(), round.failures.end());
    if (round.history.size() < budget) {
      res.warnings.push_back("task " + std::to_string(t) + ": search space exhausted after " +
                             std::to_string(round.history.size()) + " of " +
                             std::to_string(budget) + " trials");
    }
    const auto& best_trial = round.history.trials()[round.best_id];
    prev_best = best_trial.config;
    if (policy.kind == PolicyKind::fixed_first_hpo && t == 0) fixed = best_trial.config;
    learner = round.learner;

    TaskRecord rec;
    rec.task_index = t;
    rec.best_config = best_trial.config;
    rec.best_objective = best_trial.objective;
    rec.trials = round.history.size();
    rec.failed = round.history.size() - round.history.ok_count();
    rec.free_params = domain.free_names();
    rec.accuracies = problem.evaluate(*learner, t);
    rec.stream_accuracy = mean(rec.accuracies);
    for (const auto& tr : round.history.trials()) rec.cost_seconds += tr.cost_seconds;
    res.tasks.push_back(std::move(rec));
    res.rounds.push_back(std::move(round.history));

    if (policy.kind == PolicyKind::adaptive_hpo && t < policy.m) {
      fanova::ImportanceOptions io{options.forest, master_seed};
      auto report = fanova::get_param_imp(res.rounds, res.space, io);
      if (t + 1 == policy.m) {
        std::size_t k = policy.k;
        if (policy.importance_mass) {
          k = hpspace::k_for_importance_mass(res.space, report.unary, *policy.importance_mass);
        }
        if (report.degenerate) {
          res.warnings.push_back("importance is degenerate; keeping the first " +
                                 std::to_string(std::min(k, res.space.dim())) +
                                 " parameters in declaration order");
        }
        auto r = hpspace::restrict_top_k(res.space, report.unary, k, *prev_best);
        res.warnings.insert(res.warnings.end(), r.warnings.begin(), r.warnings.end());
        restricted = r.subspace.free_names();
        res.restricted_params = restricted;
      }
      res.importance.emplace_back(t, std::move(report));
    }
  }
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return res;
}

void write_result(const SequenceResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& round : result.rounds) {
    trials::save(round, dir / ("task_" + std::to_string(round.task_index())) / "round.csv");
  }
  for (const auto& [t, report] : result.importance) {
    write_json_file(dir / ("importance_task_" + std::to_string(t) + ".json"), report.to_json());
  }
  write_json_file(dir / "space.json", result.space.to_json());
  write_json_file(dir / "result.json", result.to_json());
}

nlohmann::json strip_timing(nlohmann::json result) {
  result.erase("timing");
  return result;
}

}  // namespace ahpo::adaptive
