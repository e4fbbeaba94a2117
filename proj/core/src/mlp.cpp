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
#include <map>

#include <nlohmann/json.hpp>

#include "ahpo/clbench.hpp"
#include "ahpo/error.hpp"

namespace ahpo::clbench {

nlohmann::json ModelSpec::to_json() const {
  return nlohmann::json{{"hidden1", hidden1}, {"hidden2", hidden2}};
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec m;
  m.hidden1 = j.value("hidden1", m.hidden1);
  m.hidden2 = j.value("hidden2", m.hidden2);
  if (m.hidden1 < 1 || m.hidden2 < 1) throw DomainError("hidden layer sizes must be >= 1");
  return m;
}

MLPModel::MLPModel(std::size_t input, std::size_t hidden1, std::size_t hidden2,
                   std::size_t output)
    : in_(input), h1_(hidden1), h2_(hidden2), out_(output) {
  if (in_ == 0 || h1_ == 0 || h2_ == 0 || out_ == 0) {
    throw DomainError("MLP layer sizes must be positive");
  }
  params_.assign(off_b3() + out_, 0.0);
  reset_optimizer();
}

void MLPModel::initialize(Rng& rng) {
  auto fill = [&](std::size_t off, std::size_t count, std::size_t fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) params_[off + i] = rng.uniform(-limit, limit);
  };
  std::fill(params_.begin(), params_.end(), 0.0);
  fill(off_w1(), h1_ * in_, in_);
  fill(off_w2(), h2_ * h1_, h1_);
  fill(off_w3(), out_ * h2_, h2_);
  reset_optimizer();
}

void MLPModel::set_dropout(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("dropout must lie in [0, 1)");
  dropout_ = p;
}

void MLPModel::reset_optimizer() {
  m_.assign(params_.size(), 0.0);
  v_.assign(params_.size(), 0.0);
  step_ = 0;
}

namespace {

// out[b][o] = bias[o] + sum_i w[o][i] * in[b][i]
void affine(const double* w, const double* bias, const double* in, double* out,
            std::size_t batch, std::size_t fan_in, std::size_t fan_out) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xi = in + b * fan_in;
    double* yo = out + b * fan_out;
    for (std::size_t o = 0; o < fan_out; ++o) {
      const double* wo = w + o * fan_in;
      double s = bias[o];
      for (std::size_t i = 0; i < fan_in; ++i) s += wo[i] * xi[i];
      yo[o] = s;
    }
  }
}

void relu_dropout(const std::vector<double>& z, std::vector<double>& a, std::vector<double>& mask,
                  double p, Rng* rng) {
  a.resize(z.size());
  mask.assign(z.size(), 1.0);
  if (rng != nullptr && p > 0.0) {
    const double keep = 1.0 / (1.0 - p);
    for (auto& m : mask) m = rng->uniform() < p ? 0.0 : keep;
  }
  for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0.0 ? z[i] * mask[i] : 0.0;
}

// Gradients of one affine layer; `dout` is (batch x fan_out).
void affine_backward(const double* w, const double* in, const double* dout, double* gw,
                     double* gb, double* din, std::size_t batch, std::size_t fan_in,
                     std::size_t fan_out) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xi = in + b * fan_in;
    const double* d = dout + b * fan_out;
    for (std::size_t o = 0; o < fan_out; ++o) {
      if (d[o] == 0.0) continue;
      gb[o] += d[o];
      double* gwo = gw + o * fan_in;
      for (std::size_t i = 0; i < fan_in; ++i) gwo[i] += d[o] * xi[i];
    }
    if (din != nullptr) {
      double* di = din + b * fan_in;
      for (std::size_t i = 0; i < fan_in; ++i) di[i] = 0.0;
      for (std::size_t o = 0; o < fan_out; ++o) {
        if (d[o] == 0.0) continue;
        const double* wo = w + o * fan_in;
        for (std::size_t i = 0; i < fan_in; ++i) di[i] += d[o] * wo[i];
      }
    }
  }
}

}  // namespace

void MLPModel::forward(std::span<const double> x, std::size_t batch, Cache& cache,
                       Rng* dropout_rng) const {
  if (x.size() != batch * in_) throw DomainError("forward: input size mismatch");
  cache.batch = batch;
  cache.x.assign(x.begin(), x.end());
  cache.z1.resize(batch * h1_);
  cache.z2.resize(batch * h2_);
  cache.logits.resize(batch * out_);
  const double* p = params_.data();
  affine(p + off_w1(), p + off_b1(), cache.x.data(), cache.z1.data(), batch, in_, h1_);
  relu_dropout(cache.z1, cache.a1, cache.mask1, dropout_, dropout_rng);
  affine(p + off_w2(), p + off_b2(), cache.a1.data(), cache.z2.data(), batch, h1_, h2_);
  relu_dropout(cache.z2, cache.a2, cache.mask2, dropout_, dropout_rng);
  affine(p + off_w3(), p + off_b3(), cache.a2.data(), cache.logits.data(), batch, h2_, out_);
}

std::vector<double> MLPModel::logits(std::span<const double> x, std::size_t batch) const {
  Cache c;
  forward(x, batch, c, nullptr);
  return std::move(c.logits);
}

void MLPModel::backward(const Cache& c, std::span<const double> dlogits,
                        std::span<double> grad) const {
  const std::size_t batch = c.batch;
  if (dlogits.size() != batch * out_ || grad.size() != params_.size()) {
    throw DomainError("backward: size mismatch");
  }
  const double* p = params_.data();
  double* g = grad.data();
  std::vector<double> da2(batch * h2_), da1(batch * h1_);
  affine_backward(p + off_w3(), c.a2.data(), dlogits.data(), g + off_w3(), g + off_b3(),
                  da2.data(), batch, h2_, out_);
  for (std::size_t i = 0; i < da2.size(); ++i) {
    da2[i] = c.z2[i] > 0.0 ? da2[i] * c.mask2[i] : 0.0;
  }
  affine_backward(p + off_w2(), c.a1.data(), da2.data(), g + off_w2(), g + off_b2(), da1.data(),
                  batch, h1_, h2_);
  for (std::size_t i = 0; i < da1.size(); ++i) {
    da1[i] = c.z1[i] > 0.0 ? da1[i] * c.mask1[i] : 0.0;
  }
  affine_backward(p + off_w1(), c.x.data(), da1.data(), g + off_w1(), g + off_b1(), nullptr,
                  batch, in_, h1_);
}

std::vector<bool> MLPModel::activation_pattern(std::span<const double> x,
                                               std::size_t batch) const {
  Cache c;
  forward(x, batch, c, nullptr);
  std::vector<bool> out;
  out.reserve(c.z1.size() + c.z2.size());
  for (double z : c.z1) out.push_back(z > 0.0);
  for (double z : c.z2) out.push_back(z > 0.0);
  return out;
}

void MLPModel::adamw_step(std::span<const double> grad, const AdamW& opt) {
  if (grad.size() != params_.size()) throw DomainError("adamw_step: gradient size mismatch");
  ++step_;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    m_[i] = opt.beta1 * m_[i] + (1.0 - opt.beta1) * grad[i];
    v_[i] = opt.beta2 * v_[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params_[i] -= opt.lr * (mhat / (std::sqrt(vhat) + opt.eps) + opt.weight_decay * params_[i]);
  }
}

double eval_accuracy(const MLPModel& model, const Split& split) {
  if (split.empty()) throw DomainError("eval_accuracy: empty split");
  const auto logits = model.logits(split.x, split.size());
  const std::size_t c = model.output_dim();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto* row = logits.data() + i * c;
    const auto pred = static_cast<int>(std::max_element(row, row + c) - row);
    correct += pred == split.y[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

// --- ReplayBuffer ------------------------------------------------------------

void ReplayBuffer::set_capacity(std::size_t capacity) {
  capacity_ = capacity;
  if (y_.size() > capacity_) {
    y_.resize(capacity_);
    x_.resize(capacity_ * dim_);
    if (!logits_.empty()) logits_.resize(capacity_ * logit_dim_);
  }
}

void ReplayBuffer::reservoir_add(std::span<const double> x, int y,
                                 std::span<const double> logits, Rng& rng) {
  if (dim_ == 0) dim_ = x.size();
  if (x.size() != dim_) throw DomainError("replay buffer: wrong feature dimension");
  if (!logits.empty()) {
    if (logit_dim_ == 0 && y_.empty()) logit_dim_ = logits.size();
    if (logits.size() != logit_dim_) throw DomainError("replay buffer: wrong logit dimension");
  }
  ++seen_;
  if (capacity_ == 0) return;
  std::size_t slot;
  if (y_.size() < capacity_) {
    slot = y_.size();
    y_.push_back(y);
    x_.resize(x_.size() + dim_);
    if (logit_dim_ > 0) logits_.resize(logits_.size() + logit_dim_, 0.0);
  } else {
    slot = static_cast<std::size_t>(rng.below(seen_));
    if (slot >= capacity_) return;
    y_[slot] = y;
  }
  std::copy(x.begin(), x.end(), x_.begin() + static_cast<std::ptrdiff_t>(slot * dim_));
  if (logit_dim_ > 0 && !logits.empty()) {
    std::copy(logits.begin(), logits.end(),
              logits_.begin() + static_cast<std::ptrdiff_t>(slot * logit_dim_));
  }
}

void ReplayBuffer::remove(std::size_t i) {
  const auto last = y_.size() - 1;
  if (i != last) {
    y_[i] = y_[last];
    std::copy_n(x_.begin() + static_cast<std::ptrdiff_t>(last * dim_), dim_,
                x_.begin() + static_cast<std::ptrdiff_t>(i * dim_));
    if (logit_dim_ > 0 && !logits_.empty()) {
      std::copy_n(logits_.begin() + static_cast<std::ptrdiff_t>(last * logit_dim_), logit_dim_,
                  logits_.begin() + static_cast<std::ptrdiff_t>(i * logit_dim_));
    }
  }
  y_.pop_back();
  x_.resize(y_.size() * dim_);
  if (!logits_.empty()) logits_.resize(y_.size() * logit_dim_);
}

void ReplayBuffer::balanced_add(std::span<const double> x, int y, Rng& rng) {
  if (dim_ == 0) dim_ = x.size();
  if (x.size() != dim_) throw DomainError("replay buffer: wrong feature dimension");
  ++seen_;
  if (capacity_ == 0) return;
  if (y_.size() >= capacity_) {
    // Largest class; smallest label on ties.
    std::map<int, std::size_t> counts;
    for (int c : y_) ++counts[c];
    int largest = counts.begin()->first;
    for (const auto& [c, n] : counts) {
      if (n > counts[largest]) largest = c;
    }
    const std::size_t mine = counts.count(y) ? counts[y] : 0;
    if (mine + 1 > counts[largest]) return;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < y_.size(); ++i) {
      if (y_[i] == largest) members.push_back(i);
    }
    remove(members[static_cast<std::size_t>(rng.below(members.size()))]);
  }
  y_.push_back(y);
  x_.insert(x_.end(), x.begin(), x.end());
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  std::vector<std::size_t> out;
  if (y_.empty()) return out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(static_cast<std::size_t>(rng.below(y_.size())));
  return out;
}

std::span<const double> ReplayBuffer::logits(std::size_t i) const {
  if (logits_.empty()) return {};
  return {logits_.data() + i * logit_dim_, logit_dim_};
}

std::vector<std::size_t> ReplayBuffer::class_counts(std::size_t num_classes) const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (int c : y_) {
    if (c >= 0 && static_cast<std::size_t>(c) < num_classes) ++counts[static_cast<std::size_t>(c)];
  }
  return counts;
}

Split ReplayBuffer::as_split() const { return Split{dim_, x_, y_}; }

}  // namespace ahpo::clbench
