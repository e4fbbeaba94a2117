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
#include <functional>
#include <numeric>
#include <set>

#include "ahpo/error.hpp"
#include "ahpo/format.hpp"
#include "ahpo_cli/cli.hpp"

namespace ahpo::cli {

namespace {

void check_keys(const nlohmann::json& j, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(path.empty() ? key : path + "." + key, "unknown field");
    }
  }
}

// Runs `fn`, turning library errors into ConfigError at `path`.
template <typename Fn>
auto at_path(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path, e.what());
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
}

void check_kind(const nlohmann::json& j, const std::string& path,
                const std::function<void(std::string_view)>& parse) {
  if (!j.contains("kind")) throw ConfigError(path + ".kind", "missing");
  if (!j.at("kind").is_string()) throw ConfigError(path + ".kind", "expected a string");
  at_path(path + ".kind", [&] {
    parse(j.at("kind").get<std::string>());
    return 0;
  });
}

std::vector<std::vector<std::size_t>> parse_permutations(const nlohmann::json& j,
                                                         const clbench::StreamSpec& stream) {
  std::vector<std::vector<std::size_t>> out;
  const std::size_t n = stream.n_tasks;
  if (j.is_number_unsigned() || j.is_number_integer()) {
    const auto count = j.get<std::int64_t>();
    if (count == 0) return out;
    if (count < 2) throw ConfigError("permutations", "need at least 2 task orders");
    std::vector<std::size_t> identity(n);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    out.push_back(identity);
    for (std::int64_t p = 1; p < count; ++p) {
      auto order = identity;
      auto rng = Rng::derive(stream.seed, "permutation", static_cast<std::uint64_t>(p));
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
      }
      out.push_back(order);
    }
    return out;
  }
  if (!j.is_array()) throw ConfigError("permutations", "expected a count or a list of orders");
  for (std::size_t p = 0; p < j.size(); ++p) {
    const std::string path = "permutations[" + std::to_string(p) + "]";
    auto order = at_path(path, [&] { return j[p].get<std::vector<std::size_t>>(); });
    std::set<std::size_t> seen(order.begin(), order.end());
    if (order.size() != n || seen.size() != n || (n > 0 && *seen.rbegin() >= n)) {
      throw ConfigError(path, "not a permutation of 0.." + std::to_string(n - 1));
    }
    out.push_back(std::move(order));
  }
  if (out.size() == 1) throw ConfigError("permutations", "need at least 2 task orders");
  return out;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
  check_keys(j, "", {"stream", "strategy", "space", "model", "policy", "sampler", "importance",
                     "seeds", "permutations", "threads", "out"});
  ExperimentConfig c;

  if (!j.contains("stream")) throw ConfigError("stream", "missing");
  check_keys(j["stream"], "stream",
             {"kind", "n_tasks", "n_per_task", "seed", "noise", "feature_dim",
              "class_separation", "drift_dims", "drift_amplitude"});
  check_kind(j["stream"], "stream", [](auto s) { clbench::stream_kind_from_string(s); });
  c.stream = at_path("stream", [&] { return clbench::StreamSpec::from_json(j["stream"]); });
  const bool drifting = c.stream.kind == clbench::StreamKind::drifting_function;

  if (j.contains("strategy")) {
    check_keys(j["strategy"], "strategy",
               {"kind", "lr", "weight_decay", "epochs", "batch_size", "dropout", "mem_size",
                "alpha", "beta", "temperature", "lambda", "eps", "patience"});
    check_kind(j["strategy"], "strategy", [](auto s) { clbench::strategy_kind_from_string(s); });
    c.strategy =
        at_path("strategy", [&] { return clbench::StrategyConfig::from_json(j["strategy"]); });
  } else if (!drifting) {
    throw ConfigError("strategy", "missing (required for classification streams)");
  }
  if (j.contains("space")) {
    if (drifting) throw ConfigError("space", "not used with drifting_function streams");
    c.space = at_path("space", [&] { return hpspace::ConfigSpace::from_json(j["space"]); });
    at_path("space", [&] {
      return clbench::StrategyConfig::from_configuration(c.strategy,
                                                         c.space->default_configuration());
    });
  }
  if (j.contains("model")) {
    check_keys(j["model"], "model", {"hidden1", "hidden2"});
    c.model = at_path("model", [&] { return clbench::ModelSpec::from_json(j["model"]); });
  }

  if (!j.contains("policy")) throw ConfigError("policy", "missing");
  check_keys(j["policy"], "policy",
             {"kind", "m", "k", "budget_full", "budget_restricted", "importance_mass"});
  check_kind(j["policy"], "policy", [](auto s) { adaptive::policy_kind_from_string(s); });
  c.policy = at_path("policy", [&] { return adaptive::TunerPolicy::from_json(j["policy"]); });
  at_path("policy.m", [&] {
    c.policy.validate(c.stream.n_tasks);
    return 0;
  });

  if (j.contains("sampler")) {
    check_keys(j["sampler"], "sampler",
               {"kind", "gamma_fraction", "n_candidates", "bandwidth_floor", "n_startup",
                "prior_weight", "points_per_dim", "batch_size"});
    check_kind(j["sampler"], "sampler", [](auto s) { samplers::sampler_kind_from_string(s); });
    c.sampler = at_path("sampler", [&] { return samplers::SamplerSpec::from_json(j["sampler"]); });
  }
  if (j.contains("importance")) {
    const auto& imp = j["importance"];
    check_keys(imp, "importance", {"n_trees", "bootstrap"});
    c.forest.n_trees = at_path("importance.n_trees",
                               [&] { return imp.value("n_trees", c.forest.n_trees); });
    c.forest.bootstrap =
        at_path("importance.bootstrap", [&] { return imp.value("bootstrap", true); });
    if (c.forest.n_trees < 1) throw ConfigError("importance.n_trees", "must be >= 1");
  }
  if (j.contains("seeds")) {
    c.seeds = at_path("seeds", [&] { return j["seeds"].get<std::vector<std::uint64_t>>(); });
    if (c.seeds.empty()) throw ConfigError("seeds", "need at least one seed");
    if (std::set(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size()) {
      throw ConfigError("seeds", "duplicate seed");
    }
  }
  if (j.contains("permutations")) c.permutations = parse_permutations(j["permutations"], c.stream);
  if (j.contains("threads")) {
    c.threads = at_path("threads", [&] { return j["threads"].get<std::size_t>(); });
    if (c.threads < 1) throw ConfigError("threads", "must be >= 1");
  }
  if (j.contains("out")) {
    c.out = at_path("out", [&] { return std::filesystem::path(j["out"].get<std::string>()); });
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = read_json_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("<file>", e.what());
  }
  return parse_config(j);
}

std::unique_ptr<adaptive::ContinualProblem> make_problem(const ExperimentConfig& config,
                                                         const std::vector<std::size_t>& order) {
  auto stream = clbench::make_stream(config.stream);
  if (!order.empty()) stream = clbench::permute(stream, order);
  if (config.stream.kind == clbench::StreamKind::drifting_function) {
    return std::make_unique<adaptive::DriftingProblem>(std::move(stream));
  }
  auto space = config.space ? *config.space : clbench::default_space(config.strategy.kind);
  return std::make_unique<adaptive::CLProblem>(std::move(stream), config.strategy,
                                               std::move(space), config.model);
}

}  // namespace ahpo::cli
