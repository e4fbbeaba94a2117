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

// Desk-scale continual learning: synthetic task streams, a two-hidden-layer
// ReLU classifier trained with AdamW using hand-written gradients, and the
// naive / ER / GDumb / DER(++) / LwF / SI strategies.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ahpo/hpspace.hpp"
#include "ahpo/rng.hpp"

namespace ahpo::clbench {

// --- data --------------------------------------------------------------------

enum class Scenario { class_incremental, domain_incremental };

/// Row-major features with integer labels.
struct Split {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<int> y;

  std::size_t size() const noexcept { return y.size(); }
  bool empty() const noexcept { return y.empty(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, dim}; }
  void add(std::span<const double> row, int label);
  void append(const Split& other);
};

struct Task {
  std::size_t task_index = 0;
  /// Position of the task in the generated (unpermuted) stream.
  std::size_t source_index = 0;
  Scenario scenario = Scenario::domain_incremental;
  Split train, val, test;
  std::vector<int> classes;
  double rotation_degrees = 0.0;
  /// drifting_function only: location of the optimum in encoded coordinates.
  std::vector<double> optimum;
};

enum class StreamKind { rotated_moons_dil, split_gaussians_cil, drifting_function };

std::string_view to_string(StreamKind k);
StreamKind stream_kind_from_string(std::string_view s);

struct StreamSpec {
  StreamKind kind = StreamKind::rotated_moons_dil;
  std::size_t n_tasks = 10;
  std::size_t n_per_task = 300;
  std::uint64_t seed = 0;
  double noise = 0.1;          // moons jitter / drifting-function observation noise
  std::size_t feature_dim = 16;  // split_gaussians
  double class_separation = 3.0;  // split_gaussians: stddev of class means
  std::size_t drift_dims = 3;  // drifting_function
  double drift_amplitude = 0.35;

  void validate() const;
  nlohmann::json to_json() const;
  static StreamSpec from_json(const nlohmann::json& j);
};

struct TaskStream {
  StreamSpec spec;
  std::vector<Task> tasks;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return tasks.size(); }
};

/// Deterministic in spec.seed. Each task's samples are split 10% test, then
/// 15% of the rest validation, remainder train.
TaskStream make_stream(const StreamSpec& spec);

/// Same tasks in a new order; task_index is renumbered, source_index kept.
TaskStream permute(const TaskStream& stream, std::span<const std::size_t> order);

/// Feature columns, label, task_index, split.
void dump_csv(const TaskStream& stream, const std::filesystem::path& path);

/// drifting_function objective in [0, 1]: one minus the importance-weighted
/// squared distance between the encoded configuration and the task optimum.
/// Dimension j carries weight 2^-j, so earlier dimensions matter more.
double drifting_objective(const Task& task, std::span<const double> unit);

/// Space x0..x{d-1}, each continuous-linear on [0, 1].
hpspace::ConfigSpace drifting_space(std::size_t dims);

// --- model -------------------------------------------------------------------

struct ModelSpec {
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 32;

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

/// input -> hidden1 -> hidden2 -> output, ReLU on hidden layers, softmax
/// head. Parameters are one flat vector: W1, b1, W2, b2, W3, b3 with weight
/// matrices stored row-major as (fan_out x fan_in).
class MLPModel {
 public:
  MLPModel() = default;
  MLPModel(std::size_t input, std::size_t hidden1, std::size_t hidden2, std::size_t output);

  /// He-uniform weights, zero biases; resets optimizer state.
  void initialize(Rng& rng);

  std::size_t input_dim() const noexcept { return in_; }
  std::size_t output_dim() const noexcept { return out_; }
  std::size_t num_params() const noexcept { return params_.size(); }
  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  double dropout() const noexcept { return dropout_; }
  void set_dropout(double p);

  struct Cache {
    std::size_t batch = 0;
    std::vector<double> x, z1, a1, z2, a2, logits;
    std::vector<double> mask1, mask2;  // inverted-dropout multipliers
  };

  /// Logits for `batch` rows of `x`. Dropout applies only when `dropout_rng`
  /// is non-null and the rate is positive.
  void forward(std::span<const double> x, std::size_t batch, Cache& cache,
               Rng* dropout_rng = nullptr) const;
  std::vector<double> logits(std::span<const double> x, std::size_t batch) const;

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(logits).
  void backward(const Cache& cache, std::span<const double> dlogits,
                std::span<double> grad) const;

  /// Sign pattern of hidden pre-activations (for kink detection).
  std::vector<bool> activation_pattern(std::span<const double> x, std::size_t batch) const;

  struct AdamW {
    double lr = 1e-3;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  /// Decoupled weight decay: theta -= lr * (adam_direction + wd * theta).
  void adamw_step(std::span<const double> grad, const AdamW& opt);
  void reset_optimizer();
  std::uint64_t optimizer_steps() const noexcept { return step_; }

  bool operator==(const MLPModel&) const = default;

 private:
  std::size_t in_ = 0, h1_ = 0, h2_ = 0, out_ = 0;
  double dropout_ = 0.0;
  std::vector<double> params_;
  std::vector<double> m_, v_;
  std::uint64_t step_ = 0;

  std::size_t off_w1() const { return 0; }
  std::size_t off_b1() const { return h1_ * in_; }
  std::size_t off_w2() const { return off_b1() + h1_; }
  std::size_t off_b2() const { return off_w2() + h2_ * h1_; }
  std::size_t off_w3() const { return off_b2() + h2_; }
  std::size_t off_b3() const { return off_w3() + out_ * h2_; }
};

/// Fraction of rows whose argmax logit equals the label. Throws DomainError
/// on an empty split.
double eval_accuracy(const MLPModel& model, const Split& split);

// --- replay memory -----------------------------------------------------------

class ReplayBuffer {
 public:
  ReplayBuffer() = default;
  ReplayBuffer(std::size_t capacity, std::size_t dim) : capacity_(capacity), dim_(dim) {}

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return y_.size(); }
  bool empty() const noexcept { return y_.empty(); }
  std::size_t seen() const noexcept { return seen_; }
  std::size_t dim() const noexcept { return dim_; }
  bool has_logits() const noexcept { return !logits_.empty(); }

  /// Shrinking keeps the first `capacity` slots (reservoir slots are
  /// exchangeable, so this is still a uniform subset).
  void set_capacity(std::size_t capacity);

  /// Reservoir sampling: every item seen so far is retained with equal
  /// probability capacity / seen.
  void reservoir_add(std::span<const double> x, int y, std::span<const double> logits, Rng& rng);

  /// Class-balanced greedy insertion: when full, an item from the largest
  /// class is evicted if the incoming class is smaller.
  void balanced_add(std::span<const double> x, int y, Rng& rng);

  /// `count` indices drawn uniformly with replacement.
  std::vector<std::size_t> sample(std::size_t count, Rng& rng) const;

  std::span<const double> x(std::size_t i) const { return {x_.data() + i * dim_, dim_}; }
  int y(std::size_t i) const { return y_[i]; }
  std::span<const double> logits(std::size_t i) const;
  std::size_t logit_dim() const noexcept { return logit_dim_; }
  std::vector<std::size_t> class_counts(std::size_t num_classes) const;

  /// Every stored item as a split.
  Split as_split() const;

  bool operator==(const ReplayBuffer&) const = default;

 private:
  std::size_t capacity_ = 0;
  std::size_t dim_ = 0;
  std::size_t logit_dim_ = 0;
  std::size_t seen_ = 0;
  std::vector<double> x_;
  std::vector<int> y_;
  std::vector<double> logits_;
  void remove(std::size_t i);
};

// --- strategies --------------------------------------------------------------

enum class StrategyKind { naive, er, gdumb, der, lwf, si };

std::string_view to_string(StrategyKind k);
/// Accepts naive, er, gdumb, der, lwf, si (case-insensitive).
StrategyKind strategy_kind_from_string(std::string_view s);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::naive;
  // general
  double lr = 1e-2;
  double weight_decay = 1e-4;
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double dropout = 0.0;
  // strategy-specific
  std::size_t mem_size = 200;
  double alpha = 0.5;
  double beta = 0.5;
  double temperature = 2.0;
  double lambda = 1.0;
  double eps = 1e-3;
  std::size_t patience = 3;

  void validate() const;

  /// Overrides fields named in `config` (lr, weight_decay, epochs,
  /// batch_size, dropout, mem_size, alpha, beta, temperature, lambda, eps).
  static StrategyConfig from_configuration(StrategyConfig base,
                                           const hpspace::Configuration& config);
  nlohmann::json to_json() const;
  static StrategyConfig from_json(const nlohmann::json& j);
};

/// Default search space of a strategy: general HPs plus its own.
hpspace::ConfigSpace default_space(StrategyKind kind);

/// Synaptic-intelligence bookkeeping.
struct SIState {
  std::vector<double> omega;       // running path integral for the current task
  std::vector<double> importance;  // consolidated per-parameter importance
  std::vector<double> anchor;      // parameters at the end of the previous task
  std::vector<double> task_start;  // parameters at the start of the current task

  bool operator==(const SIState&) const = default;
};

/// Everything a continual learner carries from task to task.
struct LearnerState {
  MLPModel model;
  ReplayBuffer buffer;
  std::optional<MLPModel> teacher;
  SIState si;
  std::size_t tasks_seen = 0;

  bool operator==(const LearnerState&) const = default;
};

LearnerState initial_learner(std::size_t input_dim, std::size_t num_classes,
                             const ModelSpec& model, Rng& rng);

/// One minibatch worth of inputs to a strategy loss.
struct LossBatch {
  Split current;
  Split replay;                      // ER: concatenated with current; DER: logit targets
  std::vector<double> replay_logits;  // DER targets, one row per replay item
  Split replay_labels;               // DER++: second draw used with its labels
};

/// Loss of `strategy` on `batch`; accumulates the gradient into `grad` when
/// non-null. Terms whose coefficient is zero are skipped entirely.
double strategy_loss(const MLPModel& model, const StrategyConfig& strategy,
                     const LossBatch& batch, const MLPModel* teacher, const SIState* si,
                     std::vector<double>* grad, Rng* dropout_rng);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
};

/// Central finite differences (step 1e-5) against the analytic gradient for
/// every parameter. Relative error is |a - n| / max(|a|, |n|, 1e-6).
/// Coordinates whose perturbation flips a ReLU are skipped. Dropout is
/// disabled during the check.
GradCheckResult grad_check(const MLPModel& model, const StrategyConfig& strategy,
                           const LossBatch& batch, const MLPModel* teacher = nullptr,
                           const SIState* si = nullptr);

struct TrainResult {
  LearnerState state;
  double val_accuracy = 0.0;
  std::size_t epochs_run = 0;
};

/// Trains `state` on `task` with `strategy` and returns the updated learner
/// together with its accuracy on `val` (the objective's validation pool,
/// also used for early stopping). Throws TrainingDiverged on a non-finite
/// loss or parameter.
TrainResult train_task(LearnerState state, const StrategyConfig& strategy, const Task& task,
                       const Split& val, std::size_t num_classes, Rng rng);

}  // namespace ahpo::clbench
