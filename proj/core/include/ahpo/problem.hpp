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

// Objectives that HPO rounds evaluate: a learner is trained on one task with
// a configuration and scored on validation data, and a persistent learner can
// later be assessed on every task seen so far.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ahpo/clbench.hpp"
#include "ahpo/hpspace.hpp"

namespace ahpo::adaptive {

/// Opaque, immutable learner state. Training never mutates its input, so a
/// state can be shared between concurrent trials without copying.
class Learner {
 public:
  virtual ~Learner() = default;
};

using LearnerPtr = std::shared_ptr<const Learner>;

struct TrainOutcome {
  LearnerPtr learner;
  double objective = 0.0;
};

class ContinualProblem {
 public:
  virtual ~ContinualProblem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t num_tasks() const = 0;
  virtual const hpspace::ConfigSpace& space() const = 0;

  virtual LearnerPtr initial_learner(std::uint64_t seed) const = 0;

  /// Trains a copy of `learner` on `task` and scores it. Must be a pure
  /// function of its arguments; may throw to signal a failed trial.
  virtual TrainOutcome train(const Learner& learner, std::size_t task,
                             const hpspace::Configuration& config, std::uint64_t seed) const = 0;

  /// Test accuracy on tasks 0..through_task.
  virtual std::vector<double> evaluate(const Learner& learner, std::size_t through_task) const = 0;

  /// Identifies the stream and objective; identical descriptions mean
  /// comparable results.
  virtual nlohmann::json describe() const = 0;
};

/// Continual-learning objective: a strategy trained on a synthetic stream,
/// scored by accuracy on the pooled validation splits of tasks 0..t.
class CLProblem final : public ContinualProblem {
 public:
  CLProblem(clbench::TaskStream stream, clbench::StrategyConfig base, hpspace::ConfigSpace space,
            clbench::ModelSpec model = {});

  std::string name() const override;
  std::size_t num_tasks() const override { return stream_.size(); }
  const hpspace::ConfigSpace& space() const override { return space_; }
  LearnerPtr initial_learner(std::uint64_t seed) const override;
  TrainOutcome train(const Learner& learner, std::size_t task,
                     const hpspace::Configuration& config, std::uint64_t seed) const override;
  std::vector<double> evaluate(const Learner& learner, std::size_t through_task) const override;
  nlohmann::json describe() const override;

  const clbench::TaskStream& stream() const noexcept { return stream_; }
  const clbench::StrategyConfig& base_strategy() const noexcept { return base_; }

  /// Learner state carried by this problem's learners.
  static const clbench::LearnerState& state(const Learner& learner);

 private:
  clbench::TaskStream stream_;
  clbench::StrategyConfig base_;
  hpspace::ConfigSpace space_;
  clbench::ModelSpec model_;
  std::vector<clbench::Split> pooled_val_;
};

/// Analytic objective over a drifting_function stream. The "learner" is the
/// configuration most recently trained; its accuracy on task j is the task's
/// objective at that configuration. Optional Gaussian observation noise is
/// drawn from the trial seed.
class DriftingProblem final : public ContinualProblem {
 public:
  explicit DriftingProblem(clbench::TaskStream stream);

  std::string name() const override { return "drifting_function"; }
  std::size_t num_tasks() const override { return stream_.size(); }
  const hpspace::ConfigSpace& space() const override { return space_; }
  LearnerPtr initial_learner(std::uint64_t seed) const override;
  TrainOutcome train(const Learner& learner, std::size_t task,
                     const hpspace::Configuration& config, std::uint64_t seed) const override;
  std::vector<double> evaluate(const Learner& learner, std::size_t through_task) const override;
  nlohmann::json describe() const override;

  const clbench::TaskStream& stream() const noexcept { return stream_; }

 private:
  clbench::TaskStream stream_;
  hpspace::ConfigSpace space_;
};

}  // namespace ahpo::adaptive
