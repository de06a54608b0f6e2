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

// rachfl command-line driver. Data goes to files or stdout, diagnostics to
// stderr. Exit codes: 0 success, 1 config or usage error, 2 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rachfl/channel.hpp"
#include "rachfl/config.hpp"
#include "rachfl/fedloop.hpp"
#include "rachfl/metrics.hpp"
#include "rachfl/sweep.hpp"

#ifndef RACHFL_FIGURES_DIR
#define RACHFL_FIGURES_DIR "configs/figures"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw rachfl::ConfigError({path.string() + ": cannot open"});
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes `text` to `path`, or stdout when path is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

fs::path summary_path(const std::string& out) {
  fs::path p(out);
  return p.replace_extension(".summary.json");
}

std::string render_rows(std::span<const rachfl::MetricsRow> rows, const std::string& format) {
  if (format == "json") return rachfl::metrics_to_json(rows).dump(2) + "\n";
  std::ostringstream ss;
  rachfl::write_metrics(rows, ss);
  return ss.str();
}

void write_summary(const std::string& out, const json& summary) {
  const std::string text = summary.dump(2) + "\n";
  if (out.empty()) {
    std::cerr << text;
  } else {
    emit(summary_path(out).string(), text);
    std::cout << text;
  }
}

int cmd_run(const std::string& config_path, const GlobalOptions& g) {
  auto cfg = rachfl::parse_config(read_file(config_path));
  if (g.seed) cfg.seeds = {*g.seed};
  const std::string out = g.out.empty() ? cfg.output : g.out;

  std::vector<rachfl::MetricsRow> rows;
  for (auto seed : cfg.seeds) {
    std::cerr << "[rachfl] run " << cfg.policy_label() << " K=" << cfg.slots << " seed=" << seed << "\n";
    auto run = rachfl::run_experiment(cfg, seed);
    auto r = rachfl::metrics_rows(cfg, run);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  emit(out, render_rows(rows, g.format));
  write_summary(out, rachfl::summary_to_json(rachfl::summarize(rows)));
  return 0;
}

json sweep_summary(const rachfl::SweepResult& result) {
  json points = json::array();
  for (std::size_t p = 0; p < result.points.size(); ++p) {
    const auto& point = result.points[p];
    json coords = json::object();
    for (const auto& [k, v] : point.coords) coords[k] = v;
    json entry = {{"point", p}, {"coords", coords}};
    if (!point.rows.empty()) entry["summary"] = rachfl::summary_to_json(rachfl::summarize(point.rows));
    if (!point.errors.empty()) entry["errors"] = point.errors;
    points.push_back(std::move(entry));
  }
  return points;
}

int run_sweep(rachfl::ExperimentConfig base, const rachfl::Grid& grid, std::size_t jobs, const GlobalOptions& g) {
  if (g.seed) base.seeds = {*g.seed};
  const std::string out = g.out.empty() ? base.output : g.out;
  const auto points = rachfl::expand_grid(grid).size();
  std::cerr << "[rachfl] sweep: " << points << " points x " << base.seeds.size() << " seeds, jobs=" << jobs << "\n";
  const auto result = rachfl::sweep(base, grid, jobs);

  bool failed = false;
  for (std::size_t p = 0; p < result.points.size(); ++p)
    for (const auto& e : result.points[p].errors) {
      std::cerr << "[rachfl] point " << p << ": " << e << "\n";
      failed = true;
    }

  if (g.format == "json") {
    json all = json::array();
    for (std::size_t p = 0; p < result.points.size(); ++p)
      for (auto& row : rachfl::metrics_to_json(result.points[p].rows)) {
        row["point"] = p;
        for (const auto& [k, v] : result.points[p].coords) row["coords"][k] = v;
        all.push_back(std::move(row));
      }
    emit(out, all.dump(2) + "\n");
  } else {
    std::ostringstream ss;
    rachfl::write_sweep_csv(result, ss);
    emit(out, ss.str());
  }
  write_summary(out, sweep_summary(result));
  return failed ? kExitRuntime : 0;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_spec, std::size_t jobs, const GlobalOptions& g) {
  return run_sweep(rachfl::parse_config(read_file(config_path)), rachfl::parse_grid(grid_spec), jobs, g);
}

/// Figure files hold {"description": ..., "base": <config>, "grid": {...}}.
int cmd_figure(const std::string& name, const std::string& figure_file, const std::string& figures_dir,
               std::size_t jobs, const GlobalOptions& g) {
  const fs::path path = figure_file.empty() ? fs::path(figures_dir) / (name + ".json") : fs::path(figure_file);
  json fig;
  try {
    fig = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw rachfl::ConfigError({path.string() + ": malformed JSON: " + e.what()});
  }
  if (!fig.is_object() || !fig.contains("base"))
    throw rachfl::ConfigError({path.string() + ": figure file needs a \"base\" config"});
  auto base = rachfl::config_from_json(fig["base"]);
  const auto grid = fig.contains("grid") ? rachfl::parse_grid(fig["grid"].dump()) : rachfl::Grid{};
  if (fig.contains("description")) std::cerr << "[rachfl] figure " << name << ": " << fig["description"].get<std::string>() << "\n";
  return run_sweep(std::move(base), grid, jobs, g);
}

int cmd_throughput(int users, double prob, std::uint64_t slots, const GlobalOptions& g) {
  constexpr std::uint64_t kChunk = 10000;
  rachfl::Stream rng = rachfl::StreamKey(g.seed.value_or(1)).child("throughput").open();
  std::vector<rachfl::UserId> active(static_cast<std::size_t>(users));
  for (int u = 0; u < users; ++u) active[static_cast<std::size_t>(u)] = static_cast<rachfl::UserId>(u);

  std::uint64_t successes = 0;
  for (std::uint64_t done = 0; done < slots;) {
    const auto k = std::min(kChunk, slots - done);
    rachfl::ChannelConfig ch{static_cast<int>(k), static_cast<double>(k), 1.0};
    successes += static_cast<std::uint64_t>(rachfl::simulate_frame(active, prob, ch, rng).count(rachfl::SlotKind::Success));
    done += k;
  }
  const double analytic = rachfl::expected_throughput(users, prob);
  const double empirical = static_cast<double>(successes) / static_cast<double>(slots);
  const double se = std::sqrt(analytic * (1.0 - analytic) / static_cast<double>(slots));

  if (g.format == "json") {
    emit(g.out, json{{"users", users}, {"prob", prob}, {"slots", slots}, {"analytic", analytic},
                     {"empirical", empirical}, {"std_error", se}}.dump(2) + "\n");
  } else {
    std::ostringstream ss;
    ss << "users " << users << " prob " << rachfl::format_float(prob) << " slots " << slots << "\n"
       << "analytic  " << rachfl::format_float(analytic) << "\n"
       << "empirical " << rachfl::format_float(empirical) << "\n"
       << "std_error " << rachfl::format_float(se) << "\n";
    emit(g.out, ss.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated SGD over a framed slotted-ALOHA channel"};
  app.require_subcommand(1);

  GlobalOptions g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Override the config's seed list with one seed");
  app.add_option("--out", g.out, "Output file (default: config 'output', else stdout)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  seed_opt->configurable();

  std::string config_path, grid_spec, fig_name, fig_file, figures_dir = RACHFL_FIGURES_DIR;
  std::size_t jobs = 1;

  auto* run = app.add_subcommand("run", "Run one experiment (every seed in the config)");
  run->add_option("config", config_path, "JSON config file")->required();

  auto* sw = app.add_subcommand("sweep", "Run a parameter grid");
  sw->add_option("config", config_path, "JSON base config file")->required();
  sw->add_option("--grid", grid_spec, "key=v1,v2;key2=... or a JSON object / .json file")->required();
  sw->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  int users = 10;
  double prob = 0.1;
  std::uint64_t slots = 100000;
  auto* tp = app.add_subcommand("throughput", "Analytic vs Monte-Carlo slotted-ALOHA throughput");
  tp->add_option("--users", users, "Active users")->required()->check(CLI::PositiveNumber);
  tp->add_option("--prob", prob, "Per-slot transmission probability")->required()->check(CLI::Range(0.0, 1.0));
  tp->add_option("--slots", slots, "Slots to simulate")->required()->check(CLI::PositiveNumber);

  auto* fig = app.add_subcommand("figure", "Run a canned figure sweep");
  fig->add_option("name", fig_name, "fig3, fig4, fig5, fig6, fig7, gamma, sparsifier")->required();
  fig->add_option("config", fig_file, "Figure file (default: <figures-dir>/<name>.json)");
  fig->add_option("--figures-dir", figures_dir, "Directory holding the canned figure files");
  fig->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  // Global flags are accepted after the subcommand too.
  for (auto* sub : {run, sw, tp, fig}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*run) return cmd_run(config_path, g);
    if (*sw) return cmd_sweep(config_path, grid_spec, jobs, g);
    if (*tp) return cmd_throughput(users, prob, slots, g);
    if (*fig) return cmd_figure(fig_name, fig_file, figures_dir, jobs, g);
  } catch (const rachfl::ConfigError& e) {
    std::cerr << "rachfl: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "rachfl: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
