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

#include "rachfl/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "rachfl/stats.hpp"

namespace rachfl {

std::string format_float(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

void write_metrics(std::span<const MetricsRow> rows, std::ostream& out) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << m.frame << ',' << r.seed << ',' << r.policy << ',' << r.slots << ',' << format_float(r.gamma) << ','
        << format_float(m.loss) << ',' << (m.accuracy ? format_float(*m.accuracy) : std::string()) << ','
        << m.active_users << ',' << m.received_users << ',' << m.success_slots << ',' << m.collision_slots << ','
        << m.idle_slots << ',' << format_float(m.mean_local_norm) << ',' << format_float(m.global_grad_norm)
        << '\n';
  }
}

void write_metrics(std::span<const MetricsRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_metrics(rows, out);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<MetricsRow> read_metrics(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader)
    throw std::runtime_error("metrics CSV: unexpected header");
  std::vector<MetricsRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 14)
      throw std::runtime_error("metrics CSV line " + std::to_string(lineno) + ": expected 14 fields");
    try {
      MetricsRow r;
      auto& m = r.metrics;
      m.frame = std::stoull(cells[0]);
      r.seed = std::stoull(cells[1]);
      r.policy = cells[2];
      r.slots = std::stoi(cells[3]);
      r.gamma = std::stod(cells[4]);
      m.loss = std::stod(cells[5]);
      if (!cells[6].empty()) m.accuracy = std::stod(cells[6]);
      m.active_users = std::stoull(cells[7]);
      m.received_users = std::stoull(cells[8]);
      m.success_slots = std::stoi(cells[9]);
      m.collision_slots = std::stoi(cells[10]);
      m.idle_slots = std::stoi(cells[11]);
      m.mean_local_norm = std::stod(cells[12]);
      m.global_grad_norm = std::stod(cells[13]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw std::runtime_error("metrics CSV line " + std::to_string(lineno) + ": malformed field");
    }
  }
  return rows;
}

nlohmann::json metrics_to_json(std::span<const MetricsRow> rows) {
  auto out = nlohmann::json::array();
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out.push_back({{"frame", m.frame},
                   {"seed", r.seed},
                   {"policy", r.policy},
                   {"K", r.slots},
                   {"gamma", r.gamma},
                   {"loss", m.loss},
                   {"accuracy", m.accuracy ? nlohmann::json(*m.accuracy) : nlohmann::json(nullptr)},
                   {"active_users", m.active_users},
                   {"received_users", m.received_users},
                   {"success_slots", m.success_slots},
                   {"collision_slots", m.collision_slots},
                   {"idle_slots", m.idle_slots},
                   {"mean_local_norm", m.mean_local_norm},
                   {"global_grad_norm", m.global_grad_norm}});
  }
  return out;
}

RunSummary summarize(std::span<const MetricsRow> rows) {
  RunSummary s;
  if (rows.empty()) return s;
  s.policy = rows.front().policy;
  s.slots = rows.front().slots;
  s.gamma = rows.front().gamma;

  std::map<std::uint64_t, const MetricsRow*> last;
  std::vector<std::uint64_t> order;
  for (const auto& r : rows) {
    auto [it, fresh] = last.try_emplace(r.seed, &r);
    if (fresh) order.push_back(r.seed);
    else if (r.metrics.frame >= it->second->metrics.frame) it->second = &r;
  }
  std::vector<double> losses, accs;
  for (auto seed : order) {
    const auto& m = last[seed]->metrics;
    losses.push_back(m.loss);
    if (m.accuracy) accs.push_back(*m.accuracy);
  }
  s.seeds = order;
  s.final_loss_mean = stats::mean(losses);
  s.final_loss_std = stats::stddev(losses);
  if (!accs.empty() && accs.size() == losses.size()) s.final_accuracy_mean = stats::mean(accs);
  return s;
}

nlohmann::json summary_to_json(const RunSummary& s) {
  return {{"policy", s.policy},
          {"K", s.slots},
          {"gamma", s.gamma},
          {"seeds", s.seeds},
          {"final_loss_mean", s.final_loss_mean},
          {"final_loss_std", s.final_loss_std},
          {"final_accuracy_mean",
           s.final_accuracy_mean ? nlohmann::json(*s.final_accuracy_mean) : nlohmann::json(nullptr)}};
}

}  // namespace rachfl
