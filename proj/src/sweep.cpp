// Copyright 2026 The rachfl Authors. All Rights Reserved.
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
// =============================================================================

#include "rachfl/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "rachfl/fedloop.hpp"

namespace rachfl {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Grid grid_from_json(const nlohmann::ordered_json& obj) {
  if (!obj.is_object()) throw ConfigError({"grid: expected an object of key -> value list"});
  Grid grid;
  for (const auto& [key, values] : obj.items()) {
    if (!values.is_array() || values.empty()) throw ConfigError({"grid." + key + ": expected a nonempty array"});
    GridAxis axis{key, {}};
    for (const auto& v : values) axis.values.push_back(json::parse(v.dump()));
    grid.push_back(std::move(axis));
  }
  return grid;
}

json* walk(json& root, const std::string& dotted) {
  json* node = &root;
  for (const auto& part : split(dotted, '.')) {
    if (!node->is_object() || !node->contains(part)) return nullptr;
    node = &(*node)[part];
  }
  return node;
}

std::string csv_cell(const json& v) {
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
  return quoted + "\"";
}

}  // namespace

Grid parse_grid(std::string_view spec) {
  const std::string text = trim(spec);
  if (text.empty()) return {};
  if (text.front() == '{') {
    try {
      return grid_from_json(nlohmann::ordered_json::parse(text));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError({std::string("grid: malformed JSON: ") + e.what()});
    }
  }
  if (text.size() > 5 && text.ends_with(".json")) {
    std::ifstream in(text);
    if (!in) throw ConfigError({"grid: cannot open " + text});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_grid(ss.str());
  }
  Grid grid;
  for (const auto& item : split(text, ';')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError({"grid: expected key=v1,v2 in '" + item + "'"});
    GridAxis axis{trim(std::string_view(item).substr(0, eq)), {}};
    for (const auto& token : split(std::string_view(item).substr(eq + 1), ',')) {
      if (token.empty()) throw ConfigError({"grid." + axis.key + ": empty value"});
      try {
        axis.values.push_back(json::parse(token));
      } catch (const json::parse_error&) {
        axis.values.emplace_back(token);
      }
    }
    grid.push_back(std::move(axis));
  }
  return grid;
}

std::vector<GridCoords> expand_grid(const Grid& grid) {
  std::vector<GridCoords> points{GridCoords{}};
  for (const auto& axis : grid) {
    std::vector<GridCoords> next;
    for (const auto& p : points)
      for (const auto& v : axis.values) {
        auto q = p;
        q.emplace_back(axis.key, v);
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  return points;
}

ExperimentConfig apply_coords(const ExperimentConfig& base, const GridCoords& coords) {
  json j = config_to_json(base);
  std::vector<std::string> issues;
  for (const auto& [key, value] : coords) {
    if (json* node = walk(j, key))
      *node = value;
    else
      issues.push_back(key + ": not a config key");
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return config_from_json(j);
}

SweepResult sweep(const ExperimentConfig& base, const Grid& grid, std::size_t jobs) {
  SweepResult result;
  {
    json probe = config_to_json(base);
    std::vector<std::string> issues;
    for (const auto& axis : grid) {
      result.keys.push_back(axis.key);
      if (!walk(probe, axis.key)) issues.push_back("grid." + axis.key + ": not a config key");
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
  }

  struct Task {
    std::size_t point;
    std::size_t seed_index;
  };
  std::vector<Task> tasks;
  for (auto& coords : expand_grid(grid)) {
    SweepPoint point;
    point.coords = std::move(coords);
    try {
      point.config = apply_coords(base, point.coords);
      for (std::size_t s = 0; s < point.config->seeds.size(); ++s) tasks.push_back({result.points.size(), s});
    } catch (const ConfigError& e) {
      point.errors = e.issues();
    }
    result.points.push_back(std::move(point));
  }

  std::vector<std::vector<MetricsRow>> rows(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto& t = tasks[i];
      const auto& cfg = *result.points[t.point].config;
      try {
        rows[i] = metrics_rows(cfg, run_experiment(cfg, cfg.seeds[t.seed_index]));
      } catch (const std::exception& e) {
        errors[i] = "seed " + std::to_string(cfg.seeds[t.seed_index]) + ": " + e.what();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(tasks.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto& point = result.points[tasks[i].point];
    if (!errors[i].empty()) point.errors.push_back(std::move(errors[i]));
    point.rows.insert(point.rows.end(), rows[i].begin(), rows[i].end());
  }
  return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "point";
  for (const auto& k : result.keys) out << ',' << k;
  out << ',' << kMetricsHeader << '\n';
  for (std::size_t p = 0; p < result.points.size(); ++p) {
    const auto& point = result.points[p];
    std::string prefix = std::to_string(p);
    for (const auto& [key, value] : point.coords) prefix += "," + csv_cell(value);
    std::ostringstream body;
    write_metrics(point.rows, body);
    std::string line;
    std::istringstream lines(body.str());
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) out << prefix << ',' << line << '\n';
  }
}

}  // namespace rachfl
