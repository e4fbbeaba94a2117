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
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ahpo/adaptive.hpp"
#include "ahpo/clbench.hpp"
#include "ahpo/samplers.hpp"

namespace ahpo::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kRuntimeError = 3 };

/// Invalid experiment configuration; `path` names the offending field
/// (e.g. "strategy.kind").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct ExperimentConfig {
  clbench::StreamSpec stream;
  clbench::StrategyConfig strategy;
  std::optional<hpspace::ConfigSpace> space;  // override of the strategy's default space
  clbench::ModelSpec model;
  adaptive::TunerPolicy policy;
  samplers::SamplerSpec sampler;
  fanova::ForestOptions forest;
  std::vector<std::uint64_t> seeds{0};
  /// Task orders for robustness runs; empty means the generated order only.
  std::vector<std::vector<std::size_t>> permutations;
  std::size_t threads = 1;
  std::optional<std::filesystem::path> out;
};

/// Validates every section; throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Problem for `config` with tasks in `order` (generated order when empty).
std::unique_ptr<adaptive::ContinualProblem> make_problem(const ExperimentConfig& config,
                                                         const std::vector<std::size_t>& order);

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ahpo::cli
