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
#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "ahpo/error.hpp"
#include "ahpo/fanova.hpp"
#include "ahpo/format.hpp"
#include "ahpo/metrics.hpp"
#include "ahpo_cli/cli.hpp"

namespace ahpo::cli {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto sv : split_csv_line(text)) {
    const std::string field(sv);
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != field.size()) throw ConfigError("--seeds", "bad seed '" + field + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw ConfigError("--seeds", "need at least one seed");
  return seeds;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

struct TableRow {
  std::vector<std::string> cells;
};

void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<TableRow>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.cells.size(); ++c) width[c] = std::max(width[c], r.cells[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out << std::left << std::setw(static_cast<int>(width[c])) << cells[c]
          << (c + 1 < cells.size() ? "  " : "\n");
    }
  };
  line(header);
  for (const auto& r : rows) line(r.cells);
}

// --- run ---------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string out;
  std::string seeds;
  bool validate_only = false;
  std::size_t parallel = 0;
};

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  std::vector<std::unique_ptr<adaptive::ContinualProblem>> problems;
  try {
    config = load_config(args.config);
    if (!args.seeds.empty()) config.seeds = parse_seed_list(args.seeds);
    if (!args.out.empty()) config.out = args.out;
    if (args.parallel > 0) config.threads = args.parallel;
    if (!config.out && !args.validate_only) throw ConfigError("out", "missing (set it or pass --out)");
    const auto orders = config.permutations.empty()
                            ? std::vector<std::vector<std::size_t>>{{}}
                            : config.permutations;
    for (const auto& order : orders) {
      try {
        problems.push_back(make_problem(config, order));
      } catch (const std::exception& e) {
        throw ConfigError("stream", e.what());
      }
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (args.validate_only) {
    out << "config OK: " << problems.front()->name() << ", policy "
        << adaptive::to_string(config.policy.kind) << ", " << config.seeds.size() << " seed(s)\n";
    return kOk;
  }

  const std::string policy(adaptive::to_string(config.policy.kind));
  const bool permuted = !config.permutations.empty();
  adaptive::SequenceOptions options{config.threads, config.forest};
  std::vector<metrics::SaCurveRow> curve_rows;
  nlohmann::json runs = nlohmann::json::array();
  std::vector<double> final_sa;
  std::size_t trials = 0;
  double cost = 0.0;
  bool any_partial = false;
  try {
    for (const auto seed : config.seeds) {
      const fs::path seed_dir = *config.out / ("seed_" + std::to_string(seed));
      std::vector<metrics::OrderedCurve> curves;
      std::vector<std::pair<std::size_t, fanova::ImportanceReport>> importance;
      for (std::size_t p = 0; p < problems.size(); ++p) {
        const auto result = adaptive::run_sequence(*problems[p], config.policy, config.sampler,
                                                   seed, options);
        const fs::path dir = permuted ? seed_dir / ("perm_" + std::to_string(p)) : seed_dir;
        adaptive::write_result(result, dir);
        any_partial = any_partial || result.partial;
        trials += result.total_trials();
        cost += result.total_cost_seconds();
        std::vector<double> sa;
        for (const auto& t : result.tasks) sa.push_back(t.stream_accuracy);
        runs.push_back({{"seed", seed},
                        {"permutation", p},
                        {"dir", fs::relative(dir, *config.out).generic_string()},
                        {"final_stream_accuracy", result.final_stream_accuracy()},
                        {"total_trials", result.total_trials()},
                        {"predicted_trials", result.to_json()["predicted_trials"]},
                        {"partial", result.partial}});
        final_sa.push_back(result.final_stream_accuracy());
        if (p == 0) {
          for (std::size_t t = 0; t < sa.size(); ++t) curve_rows.push_back({t, sa[t], policy, seed});
          importance = result.importance;
        }
        curves.push_back({sa, problems[p]->describe()["task_order"].get<std::vector<std::size_t>>()});
      }
      if (!importance.empty()) {
        write_text_file(seed_dir / "importance.csv", metrics::importance_csv(importance));
      }
      if (permuted && !any_partial) {
        const std::vector<std::pair<std::string, std::vector<metrics::RobustnessRow>>> rows{
            {policy, metrics::order_robustness(curves)}};
        write_text_file(seed_dir / "robustness.csv", metrics::robustness_csv(rows));
      }
    }
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << '\n';
    return kRuntimeError;
  }

  write_text_file(*config.out / "sa_curve.csv", metrics::sa_curve_csv(curve_rows));
  const double mean = metrics::mean(final_sa);
  const double sd = metrics::sample_std(final_sa);
  write_json_file(*config.out / "aggregate.json",
                  {{"policy", config.policy.to_json()},
                   {"problem", problems.front()->describe()},
                   {"runs", runs},
                   {"final_stream_accuracy_mean", mean},
                   {"final_stream_accuracy_std", sd},
                   {"total_trials", trials},
                   {"partial", any_partial}});
  print_table(out, {"policy", "runs", "SA", "trials", "cost_s"},
              {{{policy, std::to_string(final_sa.size()), fixed(mean) + " +- " + fixed(sd),
                 std::to_string(trials), fixed(cost, 2)}}});
  if (any_partial) {
    err << "warning: some runs stopped early; see \"partial\" in result.json\n";
    return kRuntimeError;
  }
  return kOk;
}

// --- importance --------------------------------------------------------------

struct ImportanceArgs {
  std::vector<std::string> csvs;
  std::string space;
  std::uint64_t seed = 0;
  std::size_t trees = 16;
  bool no_bootstrap = false;
  std::string out;
  std::size_t parallel = 1;
};

std::size_t csv_task_index(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  if (std::getline(is, line)) {
    const auto fields = split_csv_line(line);
    if (fields.size() > 1) {
      try {
        return std::stoul(std::string(fields[1]));
      } catch (const std::exception&) {
      }
    }
  }
  return 0;
}

int cmd_importance(const ImportanceArgs& args, std::ostream& out, std::ostream& err) {
  hpspace::ConfigSpace space;
  try {
    auto j = read_json_file(args.space);
    // Accept a bare space or a round sidecar / subspace descriptor.
    if (j.contains("space")) j = j["space"];
    if (j.contains("base")) j = j["base"];
    space = hpspace::ConfigSpace::from_json(j);
  } catch (const std::exception& e) {
    err << "config error: --space: " << e.what() << '\n';
    return kConfigError;
  }
  std::vector<trials::RoundHistory> histories;
  const auto domain = hpspace::Subspace::full(space);
  for (const auto& path : args.csvs) {
    try {
      const auto text = read_text_file(path);
      histories.push_back(trials::from_csv(text, csv_task_index(text), domain));
    } catch (const std::exception& e) {
      err << "error: " << path << ": " << e.what() << '\n';
      return kRuntimeError;
    }
  }
  fanova::ImportanceOptions options;
  options.seed = args.seed;
  options.forest.n_trees = args.trees;
  options.forest.bootstrap = !args.no_bootstrap;
  options.forest.threads = args.parallel;
  fanova::ImportanceReport report;
  try {
    report = fanova::get_param_imp(histories, space, options);
  } catch (const std::exception& e) {
    err << "importance failed: " << e.what() << '\n';
    return kRuntimeError;
  }
  const fs::path dir = args.out.empty() ? fs::path(".") : fs::path(args.out);
  write_text_file(dir / "importance.csv", report.to_csv());
  write_json_file(dir / "importance.json", report.to_json());
  std::vector<TableRow> rows;
  for (const auto& p : report.params) rows.push_back({{p, fixed(report.unary.at(p))}});
  print_table(out, {"param", "importance"}, rows);
  if (report.degenerate) out << "(degenerate: objective constant or too few successful trials)\n";
  return kOk;
}

// --- report ------------------------------------------------------------------

void find_results(const fs::path& dir, std::vector<fs::path>& found) {
  if (fs::is_regular_file(dir / "result.json")) {
    found.push_back(dir / "result.json");
    return;
  }
  std::vector<fs::path> children;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) children.push_back(e.path());
  }
  std::sort(children.begin(), children.end());
  for (const auto& c : children) find_results(c, found);
}

struct ReportArgs {
  std::vector<std::string> dirs;
  std::string out;
};

int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
  if (args.dirs.empty()) {
    err << "usage error: report needs at least one result directory\n";
    return kConfigError;
  }
  struct Group {
    std::string stream;
    std::vector<double> sa;
    std::vector<double> trials;
  };
  std::map<std::string, Group> groups;
  std::vector<std::string> order;
  std::optional<nlohmann::json> reference;
  try {
    std::vector<fs::path> files;
    for (const auto& d : args.dirs) {
      if (!fs::is_directory(d)) throw DomainError("not a directory: " + d);
      const auto before = files.size();
      find_results(d, files);
      if (files.size() == before) throw DomainError("no result.json under " + d);
    }
    for (const auto& f : files) {
      const auto j = read_json_file(f);
      const auto stream = j.at("problem").at("stream");
      if (!reference) {
        reference = stream;
      } else if (*reference != stream) {
        throw ComparabilityError("results mix different streams (" + f.string() + ")");
      }
      const auto policy = j.at("policy").at("kind").get<std::string>();
      if (!groups.count(policy)) order.push_back(policy);
      auto& g = groups[policy];
      g.stream = stream.at("kind").get<std::string>();
      g.sa.push_back(j.at("final_stream_accuracy").get<double>());
      g.trials.push_back(j.at("total_trials").get<double>());
    }
  } catch (const std::exception& e) {
    err << "report failed: " << e.what() << '\n';
    return kRuntimeError;
  }
  std::ostringstream csv;
  csv << "policy,stream,runs,sa_mean,sa_std,trials_mean\n";
  std::vector<TableRow> rows;
  for (const auto& name : order) {
    const auto& g = groups[name];
    const double m = metrics::mean(g.sa), s = metrics::sample_std(g.sa);
    const double tr = metrics::mean(g.trials);
    csv << name << ',' << g.stream << ',' << g.sa.size() << ',' << format_double(m) << ','
        << format_double(s) << ',' << format_double(tr) << '\n';
    rows.push_back({{name, g.stream, std::to_string(g.sa.size()), fixed(m) + " +- " + fixed(s),
                     fixed(tr, 1)}});
  }
  if (!args.out.empty()) write_text_file(fs::path(args.out) / "report.csv", csv.str());
  print_table(out, {"policy", "stream", "runs", "SA", "trials"}, rows);
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive hyperparameter optimization for task sequences", "ahpo"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("--config", run_args.config, "Experiment config (JSON)")->required();
  run->add_option("--out", run_args.out, "Output directory (overrides config)");
  run->add_option("--seeds", run_args.seeds, "Comma-separated seeds (overrides config)");
  run->add_flag("--validate-only", run_args.validate_only, "Check the config and exit");
  run->add_option("--parallel", run_args.parallel, "Concurrent trials per round");

  ImportanceArgs imp_args;
  auto* imp = app.add_subcommand("importance", "fANOVA importance from persisted round CSVs");
  imp->add_option("csvs", imp_args.csvs, "Round CSV files")->required();
  imp->add_option("--space", imp_args.space, "Space JSON (space.json or a round sidecar)")
      ->required();
  imp->add_option("--seed", imp_args.seed, "Master seed of the forest streams");
  imp->add_option("--trees", imp_args.trees, "Trees per forest")->check(CLI::PositiveNumber);
  imp->add_flag("--no-bootstrap", imp_args.no_bootstrap, "Fit every tree on all samples");
  imp->add_option("--out", imp_args.out, "Output directory");
  imp->add_option("--parallel", imp_args.parallel, "Threads for forest fitting")
      ->check(CLI::PositiveNumber);

  ReportArgs rep_args;
  auto* rep = app.add_subcommand("report", "Compare finished runs");
  rep->add_option("dirs", rep_args.dirs, "Result directories");
  rep->add_option("--out", rep_args.out, "Directory for report.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kConfigError;
  }
  try {
    if (*run) return cmd_run(run_args, out, err);
    if (*imp) return cmd_importance(imp_args, out, err);
    return cmd_report(rep_args, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace ahpo::cli
