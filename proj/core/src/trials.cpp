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

#include "ahpo/trials.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ahpo/error.hpp"
#include "ahpo/format.hpp"

namespace ahpo::trials {

namespace {

constexpr std::string_view kFixedHeader = "trial_id,task_index,objective,cost_seconds,seed,status";
constexpr std::size_t kFixedColumns = 6;

template <typename T>
T parse_unsigned(std::string_view s, std::string_view field, std::size_t line) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw ParseError("bad " + std::string(field) + " '" + std::string(s) + "'", line);
  }
  return v;
}

}  // namespace

std::string_view to_string(TrialStatus s) { return s == TrialStatus::ok ? "ok" : "failed"; }

bool Trial::operator==(const Trial& o) const {
  const bool same_objective =
      (std::isnan(objective) && std::isnan(o.objective)) || objective == o.objective;
  return trial_id == o.trial_id && task_index == o.task_index && config == o.config &&
         same_objective && cost_seconds == o.cost_seconds && seed == o.seed &&
         status == o.status;
}

void RoundHistory::append(Trial trial) {
  if (trial.trial_id != trials_.size()) {
    throw DomainError("trial_id " + std::to_string(trial.trial_id) + " out of order; expected " +
                      std::to_string(trials_.size()));
  }
  if (trial.ok() && !std::isfinite(trial.objective)) {
    throw DomainError("ok trial " + std::to_string(trial.trial_id) + " has non-finite objective");
  }
  if (!(trial.cost_seconds >= 0.0)) throw DomainError("trial cost must be nonnegative");
  if (!domain_.contains(trial.config)) {
    throw DomainError("trial " + std::to_string(trial.trial_id) +
                      ": configuration outside the round's search domain");
  }
  trials_.push_back(std::move(trial));
}

std::size_t RoundHistory::ok_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : trials_) n += t.ok() ? 1 : 0;
  return n;
}

const Trial& best(const RoundHistory& history) {
  const Trial* out = nullptr;
  for (const auto& t : history.trials()) {
    if (t.ok() && (out == nullptr || t.objective > out->objective)) out = &t;
  }
  if (out == nullptr) {
    throw EmptyRoundError("round for task " + std::to_string(history.task_index()) +
                          " has no successful trial");
  }
  return *out;
}

std::string to_csv(const RoundHistory& history) {
  const auto& space = history.domain().base();
  std::ostringstream os;
  os << kFixedHeader;
  for (const auto& p : space.params()) os << ',' << p.name;
  os << '\n';
  for (const auto& t : history.trials()) {
    os << t.trial_id << ',' << t.task_index << ',' << format_double(t.objective) << ','
       << format_double(t.cost_seconds) << ',' << t.seed << ',' << to_string(t.status);
    for (const auto& p : space.params()) os << ',' << hpspace::format_value(t.config.at(p.name));
    os << '\n';
  }
  return os.str();
}

RoundHistory from_csv(std::string_view text, std::size_t task_index,
                      const hpspace::Subspace& domain) {
  const auto& space = domain.base();
  RoundHistory history(task_index, domain);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (!saw_header) {
      saw_header = true;
      const auto expected_cols = kFixedColumns + space.dim();
      std::vector<std::string> unknown;
      for (std::size_t i = kFixedColumns; i < fields.size(); ++i) {
        if (!space.index_of(fields[i])) unknown.emplace_back(fields[i]);
      }
      if (!unknown.empty()) {
        std::string msg = "columns not in space:";
        for (const auto& u : unknown) msg += " " + u;
        throw ParseError(msg, line_no);
      }
      if (fields.size() != expected_cols) {
        throw ParseError("header has " + std::to_string(fields.size()) + " columns, expected " +
                             std::to_string(expected_cols),
                         line_no);
      }
      std::string fixed;
      for (std::size_t i = 0; i < kFixedColumns; ++i) {
        if (i) fixed += ',';
        fixed += fields[i];
      }
      if (fixed != kFixedHeader) throw ParseError("unexpected header", line_no);
      for (std::size_t i = 0; i < space.dim(); ++i) {
        if (fields[kFixedColumns + i] != space.param(i).name) {
          throw ParseError("parameter columns out of declaration order", line_no);
        }
      }
      continue;
    }
    if (fields.size() != kFixedColumns + space.dim()) {
      throw ParseError("expected " + std::to_string(kFixedColumns + space.dim()) +
                           " fields, got " + std::to_string(fields.size()),
                       line_no);
    }
    Trial t;
    t.trial_id = parse_unsigned<std::size_t>(fields[0], "trial_id", line_no);
    t.task_index = parse_unsigned<std::size_t>(fields[1], "task_index", line_no);
    const auto obj = parse_double(fields[2]);
    const auto cost = parse_double(fields[3]);
    if (!obj) throw ParseError("bad objective '" + std::string(fields[2]) + "'", line_no);
    if (!cost) throw ParseError("bad cost_seconds '" + std::string(fields[3]) + "'", line_no);
    t.objective = *obj;
    t.cost_seconds = *cost;
    t.seed = parse_unsigned<std::uint64_t>(fields[4], "seed", line_no);
    if (fields[5] == "ok") {
      t.status = TrialStatus::ok;
    } else if (fields[5] == "failed") {
      t.status = TrialStatus::failed;
    } else {
      throw ParseError("bad status '" + std::string(fields[5]) + "'", line_no);
    }
    try {
      for (std::size_t i = 0; i < space.dim(); ++i) {
        const auto& p = space.param(i);
        t.config.set(p.name, p.parse(fields[kFixedColumns + i]));
      }
      history.append(std::move(t));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (!saw_header) throw ParseError("missing header");
  return history;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".json");
  return p;
}

void save(const RoundHistory& history, const std::filesystem::path& csv) {
  write_text_file(csv, to_csv(history));
  nlohmann::json side = history.domain().to_json();
  side["task_index"] = history.task_index();
  write_json_file(sidecar_path(csv), side);
}

RoundHistory load(const std::filesystem::path& csv) {
  const auto side = read_json_file(sidecar_path(csv));
  const auto domain = hpspace::Subspace::from_json(side);
  const std::size_t task = side.value("task_index", std::size_t{0});
  return from_csv(read_text_file(csv), task, domain);
}

}  // namespace ahpo::trials
