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

// Tuning policies over a task sequence: fixed baselines, a full HPO round per
// task, and the adaptive policy that searches only the most important
// hyperparameters once a few warm-up rounds have been analysed.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ahpo/fanova.hpp"
#include "ahpo/problem.hpp"
#include "ahpo/samplers.hpp"
#include "ahpo/trials.hpp"

namespace ahpo::adaptive {

enum class PolicyKind { fixed_random, fixed_first_hpo, per_task_hpo, adaptive_hpo };

std::string_view to_string(PolicyKind k);
PolicyKind policy_kind_from_string(std::string_view s);

struct TunerPolicy {
  PolicyKind kind = PolicyKind::adaptive_hpo;
  std::size_t m = 2;
  std::size_t k = 2;
  std::size_t budget_full = 30;
  std::size_t budget_restricted = 12;
  /// When set, k is the smallest count whose share of the unary importance
  /// reaches this mass.
  std::optional<double> importance_mass;

  /// Throws DomainError. `num_tasks` = 0 skips the m < T check.
  void validate(std::size_t num_tasks = 0) const;

  nlohmann::json to_json() const;
  static TunerPolicy from_json(const nlohmann::json& j);
};

/// Trials the policy spends on T tasks when nothing fails.
std::size_t predicted_budget(const TunerPolicy& policy, std::size_t num_tasks);

struct RoundOutcome {
  trials::RoundHistory history;
  std::size_t best_id = 0;
  /// Learner produced by the best trial.
  LearnerPtr learner;
  /// One diagnostic line per failed trial.
  std::vector<std::string> failures;
};

struct RoundOptions {
  std::size_t threads = 1;
};

/// Evaluates the warm starts in order, then fills the budget with sampler
/// proposals in waves of `sampler.batch_size`. Each trial trains `learner`
/// afresh with seed derived from (master_seed, task, trial_id). Exceptions
/// from training mark the trial failed. Throws EmptyRoundError when no
/// trial succeeds.
RoundOutcome hpo_round(const ContinualProblem& problem, const Learner& learner,
                       std::size_t task, const hpspace::Subspace& domain,
                       const samplers::SamplerSpec& sampler, std::size_t budget,
                       const std::vector<hpspace::Configuration>& warm_start,
                       std::uint64_t master_seed, const RoundOptions& options = {});

struct TaskRecord {
  std::size_t task_index = 0;
  hpspace::Configuration best_config;
  double best_objective = 0.0;
  std::size_t trials = 0;
  std::size_t failed = 0;
  std::vector<std::string> free_params;
  /// Test accuracy on tasks 0..task_index after training on this task.
  std::vector<double> accuracies;
  double stream_accuracy = 0.0;
  double cost_seconds = 0.0;
};

struct SequenceResult {
  nlohmann::json problem;
  TunerPolicy policy;
  samplers::SamplerSpec sampler;
  std::uint64_t master_seed = 0;
  std::size_t num_tasks = 0;
  hpspace::ConfigSpace space;
  std::vector<TaskRecord> tasks;
  std::vector<trials::RoundHistory> rounds;
  /// Adaptive only: report after each warm-up task, keyed by task index.
  std::vector<std::pair<std::size_t, fanova::ImportanceReport>> importance;
  std::vector<std::string> restricted_params;
  std::vector<std::string> warnings;
  bool partial = false;
  std::string error;
  double wall_seconds = 0.0;

  double final_stream_accuracy() const;
  std::size_t total_trials() const;
  double total_cost_seconds() const;
  /// Deterministic part; wall-clock quantities live under "timing" only.
  nlohmann::json to_json() const;
};

struct SequenceOptions {
  std::size_t threads = 1;
  fanova::ForestOptions forest;
};

/// Runs the policy over every task in order. An empty round stops the run
/// and returns a partial result instead of throwing.
SequenceResult run_sequence(const ContinualProblem& problem, const TunerPolicy& policy,
                            const samplers::SamplerSpec& sampler, std::uint64_t master_seed,
                            const SequenceOptions& options = {});

/// <dir>/task_<t>/round.csv, <dir>/result.json, <dir>/importance_task_<t>.json,
/// <dir>/space.json.
void write_result(const SequenceResult& result, const std::filesystem::path& dir);

/// result.json with the "timing" object removed, for byte comparisons.
nlohmann::json strip_timing(nlohmann::json result);

}  // namespace ahpo::adaptive
