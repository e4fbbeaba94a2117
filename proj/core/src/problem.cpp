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


#include "ahpo/problem.hpp"

#include <nlohmann/json.hpp>

#include "ahpo/error.hpp"

namespace ahpo::adaptive {

namespace {

struct CLLearner final : Learner {
  clbench::LearnerState state;
};

struct DriftLearner final : Learner {
  std::vector<double> unit;  // encoded configuration, empty before any task
};

}  // namespace

CLProblem::CLProblem(clbench::TaskStream stream, clbench::StrategyConfig base,
                     hpspace::ConfigSpace space, clbench::ModelSpec model)
    : stream_(std::move(stream)),
      base_(base),
      space_(std::move(space)),
      model_(model) {
  if (stream_.spec.kind == clbench::StreamKind::drifting_function) {
    throw DomainError("CLProblem needs a classification stream");
  }
  if (stream_.size() < 2) throw DomainError("stream needs at least 2 tasks");
  base_.validate();
  // Every configuration of the space must map onto a valid strategy.
  clbench::StrategyConfig::from_configuration(base_, space_.default_configuration());
  clbench::Split pool{stream_.input_dim, {}, {}};
  for (const auto& t : stream_.tasks) {
    pool.append(t.val);
    pooled_val_.push_back(pool);
  }
}

std::string CLProblem::name() const {
  return std::string(clbench::to_string(stream_.spec.kind)) + "/" +
         std::string(clbench::to_string(base_.kind));
}

const clbench::LearnerState& CLProblem::state(const Learner& learner) {
  const auto* l = dynamic_cast<const CLLearner*>(&learner);
  if (l == nullptr) throw DomainError("learner does not belong to a continual-learning problem");
  return l->state;
}

LearnerPtr CLProblem::initial_learner(std::uint64_t seed) const {
  auto rng = Rng::derive(seed, "init");
  auto l = std::make_shared<CLLearner>();
  l->state = clbench::initial_learner(stream_.input_dim, stream_.num_classes, model_, rng);
  return l;
}

TrainOutcome CLProblem::train(const Learner& learner, std::size_t task,
                              const hpspace::Configuration& config, std::uint64_t seed) const {
  if (task >= stream_.size()) throw DomainError("task index out of range");
  space_.validate(config);
  const auto strategy = clbench::StrategyConfig::from_configuration(base_, config);
  auto result = clbench::train_task(state(learner), strategy, stream_.tasks[task],
                                    pooled_val_[task], stream_.num_classes, Rng(seed));
  auto l = std::make_shared<CLLearner>();
  l->state = std::move(result.state);
  return {std::move(l), result.val_accuracy};
}

std::vector<double> CLProblem::evaluate(const Learner& learner, std::size_t through_task) const {
  if (through_task >= stream_.size()) throw DomainError("task index out of range");
  const auto& model = state(learner).model;
  std::vector<double> acc;
  for (std::size_t j = 0; j <= through_task; ++j) {
    acc.push_back(clbench::eval_accuracy(model, stream_.tasks[j].test));
  }
  return acc;
}

nlohmann::json CLProblem::describe() const {
  std::vector<std::size_t> order;
  for (const auto& t : stream_.tasks) order.push_back(t.source_index);
  return {{"stream", stream_.spec.to_json()},
          {"task_order", order},
          {"strategy", base_.to_json()},
          {"model", model_.to_json()}};
}

DriftingProblem::DriftingProblem(clbench::TaskStream stream) : stream_(std::move(stream)) {
  if (stream_.spec.kind != clbench::StreamKind::drifting_function) {
    throw DomainError("DriftingProblem needs a drifting_function stream");
  }
  if (stream_.size() < 2) throw DomainError("stream needs at least 2 tasks");
  space_ = clbench::drifting_space(stream_.spec.drift_dims);
}

LearnerPtr DriftingProblem::initial_learner(std::uint64_t) const {
  return std::make_shared<DriftLearner>();
}

TrainOutcome DriftingProblem::train(const Learner& learner, std::size_t task,
                                    const hpspace::Configuration& config,
                                    std::uint64_t seed) const {
  if (task >= stream_.size()) throw DomainError("task index out of range");
  if (dynamic_cast<const DriftLearner*>(&learner) == nullptr) {
    throw DomainError("learner does not belong to a drifting-function problem");
  }
  auto l = std::make_shared<DriftLearner>();
  l->unit = space_.encode(config);
  double objective = clbench::drifting_objective(stream_.tasks[task], l->unit);
  if (stream_.spec.noise > 0.0) {
    Rng rng(seed);
    objective += stream_.spec.noise * rng.normal();
  }
  return {std::move(l), objective};
}

std::vector<double> DriftingProblem::evaluate(const Learner& learner,
                                              std::size_t through_task) const {
  if (through_task >= stream_.size()) throw DomainError("task index out of range");
  const auto* l = dynamic_cast<const DriftLearner*>(&learner);
  if (l == nullptr) throw DomainError("learner does not belong to a drifting-function problem");
  std::vector<double> out;
  for (std::size_t j = 0; j <= through_task; ++j) {
    out.push_back(l->unit.empty() ? 0.0 : clbench::drifting_objective(stream_.tasks[j], l->unit));
  }
  return out;
}

nlohmann::json DriftingProblem::describe() const {
  std::vector<std::size_t> order;
  for (const auto& t : stream_.tasks) order.push_back(t.source_index);
  return {{"stream", stream_.spec.to_json()}, {"task_order", order}};
}

}  // namespace ahpo::adaptive
