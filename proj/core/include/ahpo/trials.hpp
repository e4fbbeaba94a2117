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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ahpo/hpspace.hpp"

namespace ahpo::trials {

enum class TrialStatus { ok, failed };

std::string_view to_string(TrialStatus s);

/// One objective evaluation. Objectives are maximized; a failed trial keeps
/// a NaN objective and counts towards the budget only.
struct Trial {
  std::size_t trial_id = 0;
  std::size_t task_index = 0;
  hpspace::Configuration config;
  double objective = 0.0;
  double cost_seconds = 0.0;
  std::uint64_t seed = 0;
  TrialStatus status = TrialStatus::ok;

  bool ok() const noexcept { return status == TrialStatus::ok; }

  /// Field-wise equality; NaN objectives compare equal to each other.
  bool operator==(const Trial& other) const;
};

/// Append-only log of one task's HPO round.
class RoundHistory {
 public:
  RoundHistory() = default;
  RoundHistory(std::size_t task_index, hpspace::Subspace domain)
      : task_index_(task_index), domain_(std::move(domain)) {}

  /// Requires trial_id == size(), a config inside the domain, a finite
  /// objective when ok, and a nonnegative cost. Throws DomainError.
  void append(Trial trial);

  std::size_t task_index() const noexcept { return task_index_; }
  const hpspace::Subspace& domain() const noexcept { return domain_; }
  const std::vector<Trial>& trials() const noexcept { return trials_; }
  std::size_t size() const noexcept { return trials_.size(); }
  bool empty() const noexcept { return trials_.empty(); }
  std::size_t ok_count() const noexcept;

  bool operator==(const RoundHistory&) const = default;

 private:
  std::size_t task_index_ = 0;
  hpspace::Subspace domain_;
  std::vector<Trial> trials_;
};

/// Ok trial with the largest objective; earliest trial_id on ties.
/// Throws EmptyRoundError when no trial succeeded.
const Trial& best(const RoundHistory& history);

/// CSV text: trial_id,task_index,objective,cost_seconds,seed,status,<params>.
std::string to_csv(const RoundHistory& history);
/// Parses CSV text against `domain`. Throws ParseError with a line number.
RoundHistory from_csv(std::string_view text, std::size_t task_index,
                      const hpspace::Subspace& domain);

/// JSON sidecar path for a round CSV (same stem, .json extension).
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Writes the CSV plus its JSON sidecar holding the (sub)space descriptor.
void save(const RoundHistory& history, const std::filesystem::path& csv);
RoundHistory load(const std::filesystem::path& csv);

}  // namespace ahpo::trials
