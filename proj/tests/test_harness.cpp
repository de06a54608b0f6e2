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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rachfl/config.hpp"
#include "rachfl/fedloop.hpp"
#include "rachfl/metrics.hpp"
#include "rachfl/rng.hpp"
#include "rachfl/stats.hpp"
#include "rachfl/sweep.hpp"

using namespace rachfl;
using nlohmann::json;

namespace {

std::vector<std::string> issues_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool mentions(const std::vector<std::string>& issues, std::string_view needle) {
  return std::any_of(issues.begin(), issues.end(),
                     [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.frames = 4;
  cfg.task.points = 200;
  cfg.task.test_points = 50;
  cfg.seeds = {1, 2};
  return cfg;
}

}  // namespace

TEST_CASE("config defaults") {
  const auto c = parse_config("{}");
  CHECK(c == ExperimentConfig{});
  CHECK(c.users == 10);
  CHECK(c.frames == 100);
  CHECK(c.slots == 10);
  CHECK(c.gamma == 1.0);
  CHECK(c.learning_rate == 0.01);
  CHECK(c.policy.kind == PolicyKind::Aog);
  CHECK(c.policy.global_signal == GlobalSignal::MeanGradient);
  CHECK(c.kn_semantics == KnSemantics::Received);
  CHECK(c.aggregate == AggregateMode::Sum);
  CHECK(c.compression.kind == Sparsifier::TopK);
  CHECK(c.task.kind == TaskKind::Regression);
  CHECK(c.model_dim() == 20);
  CHECK(c.slot_capacity() == 2);
  CHECK(c.seeds == std::vector<std::uint64_t>{1});
  CHECK(c.policy_label() == "aog");
}

TEST_CASE("config values and labels") {
  const auto c = parse_config(R"({"users": 4, "slots": 5, "budget": 100,
    "policy": {"kind": "fixed_random", "active": 3},
    "task": {"kind": "classification", "features": 6, "classes": 3, "points": 400, "batch": 10},
    "lr_decay": 0.5, "seeds": [3, 4]})");
  CHECK(c.slot_capacity() == 20);
  CHECK(c.model_dim() == 18);
  CHECK(c.policy_label() == "fixed_random_3");
  CHECK(c.learning_rate_at(2) == doctest::Approx(0.005));
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 4});
}

TEST_CASE("config errors name the offending key") {
  CHECK(mentions(issues_of(R"({"slots": 30})"), "slot capacity floor(budget / slots) = floor(20 / 30) is 0"));
  CHECK(mentions(issues_of(R"({"gamma": 1.5})"), "gamma"));
  CHECK(mentions(issues_of(R"({"users": 7})"), "task.points"));
  CHECK(mentions(issues_of(R"({"policy": {"kind": "fixed_random", "active": 11}})"), "policy.active"));
  CHECK(mentions(issues_of(R"({"policy": {"kind": "fixed_random", "tx_prob": 0}})"), "policy.tx_prob"));
  CHECK(mentions(issues_of(R"({"channel": "perfect", "slots": 2, "budget": 20})"), "channel"));
  CHECK(mentions(issues_of(R"({"policy": {"kind": "psychic"}})"), "policy.kind"));
  CHECK(mentions(issues_of(R"({"frames": -1})"), "frames"));
  CHECK(mentions(issues_of(R"({"frames": )"), "malformed JSON"));
  CHECK(mentions(issues_of(R"([1, 2])"), "expected an object"));
}

TEST_CASE("unknown keys are rejected with their path") {
  CHECK(mentions(issues_of(R"({"polcy": {}})"), "polcy: unknown key"));
  CHECK(mentions(issues_of(R"({"task": {"noize": 1}})"), "task.noize: unknown key"));
}

TEST_CASE("all issues are reported together") {
  const auto issues = issues_of(R"({"polcy": {}, "frames": "ten", "task": {"kind": "vision"}})");
  CHECK(issues.size() == 3);
  CHECK(mentions(issues, "polcy"));
  CHECK(mentions(issues, "frames"));
  CHECK(mentions(issues, "task.kind"));

  const auto semantic = issues_of(R"({"gamma": 2, "learning_rate": -1})");
  CHECK(semantic.size() == 2);
}

TEST_CASE("config serialization round-trips") {
  Stream rng(99);
  for (int t = 0; t < 200; ++t) {
    ExperimentConfig c;
    c.users = 1 + rng.below(8);
    c.task.points = c.users * (10 + rng.below(30));
    c.task.batch = 1 + rng.below(c.task.points / c.users);
    c.task.features = 1 + rng.below(8);
    c.task.kind = rng.bernoulli(0.5) ? TaskKind::Regression : TaskKind::Classification;
    c.task.classes = 2 + static_cast<int>(rng.below(4));
    c.task.noise = rng.uniform();
    c.task.label_skew = rng.bernoulli(0.5) ? 0.0 : rng.uniform();
    c.frames = rng.below(50);
    c.slots = 1 + static_cast<int>(rng.below(4));
    c.budget = static_cast<std::int64_t>(c.slots * (1 + rng.below(10)));
    c.gamma = rng.uniform();
    c.learning_rate = 0.001 + rng.uniform();
    c.aggregate = rng.bernoulli(0.5) ? AggregateMode::Sum : AggregateMode::Mean;
    c.kn_semantics = rng.bernoulli(0.5) ? KnSemantics::Received : KnSemantics::Active;
    c.policy.kind = static_cast<PolicyKind>(rng.below(3));
    c.policy.active = rng.below(c.users + 1);
    if (rng.bernoulli(0.5)) c.policy.tx_prob = 0.1 + 0.9 * rng.uniform();
    c.policy.aog = {rng.uniform() * 3, 1 + rng.below(c.users), rng.bernoulli(0.5)};
    c.policy.global_signal = rng.bernoulli(0.5) ? GlobalSignal::MeanGradient : GlobalSignal::LastAggregate;
    c.policy.probes = 1 + rng.below(5);
    c.compression.kind = rng.bernoulli(0.5) ? Sparsifier::TopK : Sparsifier::RandK;
    c.compression.rescale_rand_k = rng.bernoulli(0.5);
    c.seeds = {rng.below(1000), rng.below(1000)};
    c.output = "out.csv";
    CHECK(parse_config(serialize_config(c)) == c);
  }
}

TEST_CASE("random streams") {
  CHECK(StreamKey(1).child("a").digest() == StreamKey(1).child("a").digest());
  CHECK(StreamKey(1).child("a").digest() != StreamKey(2).child("a").digest());
  CHECK(StreamKey(1).child("a").digest() != StreamKey(1).child("b").digest());
  CHECK(StreamKey(1).child("a", 0).digest() != StreamKey(1).child("a", 1).digest());
  CHECK(StreamKey(1).child("a").child("b").digest() != StreamKey(1).child("b").child("a").digest());

  const StreamLabel labels[] = {{"frame", 3}, {"user", 2}};
  auto x = rng_stream(5, labels);
  auto y = StreamKey(5).child("frame", 3).child("user", 2).open();
  for (int i = 0; i < 10; ++i) CHECK(x.next_u64() == y.next_u64());
  CHECK_THROWS_AS(rng_stream(5, std::span<const StreamLabel>{}), std::invalid_argument);

  Stream a(3), b(3), c(4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto u = a.next_u64();
    CHECK(u == b.next_u64());
    differs |= u != c.next_u64();
  }
  CHECK(differs);
}

TEST_CASE("variates are well distributed") {
  Stream rng(12345);
  std::vector<std::uint64_t> buckets(20, 0), small(7, 0);
  for (int i = 0; i < 100000; ++i) {
    ++buckets[static_cast<std::size_t>(rng.uniform() * 20)];
    ++small[rng.below(7)];
  }
  CHECK(stats::chi_square_uniform(buckets).p_value > 0.001);
  CHECK(stats::chi_square_uniform(small).p_value > 0.001);

  std::vector<double> normals, gammas;
  for (int i = 0; i < 100000; ++i) {
    normals.push_back(rng.normal());
    gammas.push_back(rng.gamma(0.5));
  }
  CHECK(std::abs(stats::mean(normals)) < 0.015);
  CHECK(std::abs(stats::stddev(normals) - 1.0) < 0.015);
  CHECK(std::abs(stats::mean(gammas) - 0.5) < 0.015);

  const auto picks = sample_without_replacement(10, 10, rng);
  auto sorted = picks;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 10; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("statistics") {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 2.5, 3.7, 4.1, 6};
  CHECK(stats::mean(a) == 3.0);
  CHECK(stats::stddev(a) == doctest::Approx(std::sqrt(2.5)));
  const auto t = stats::paired_t_less(a, b);
  CHECK(t.statistic == doctest::Approx(-3.9026618135279434));
  CHECK(t.p_value == doctest::Approx(0.0087510122147833));

  const std::vector<std::uint64_t> counts{10, 20, 30, 40};
  const auto chi = stats::chi_square_uniform(counts);
  CHECK(chi.statistic == doctest::Approx(20.0));
  CHECK(chi.p_value == doctest::Approx(0.00016974243555282632));
  CHECK(stats::chi_square_uniform(std::vector<std::uint64_t>{25, 25, 25, 25}).p_value == doctest::Approx(1.0));
}

TEST_CASE("metrics CSV") {
  MetricsRow row{7, "aog", 10, 1.0, {}};
  row.metrics = {3, 0.1234567, std::nullopt, 4, 2, 2, 5, 3, 1.5, 0.25};
  std::ostringstream out;
  write_metrics(std::vector<MetricsRow>{row}, out);
  CHECK(out.str() == std::string(kMetricsHeader) + "\n3,7,aog,10,1,0.123457,,4,2,2,5,3,1.5,0.25\n");

  row.metrics.accuracy = 0.875;
  std::ostringstream with_acc;
  write_metrics(std::vector<MetricsRow>{row}, with_acc);
  std::istringstream in(with_acc.str());
  const auto back = read_metrics(in);
  REQUIRE(back.size() == 1);
  CHECK(back[0].metrics.accuracy == 0.875);
  CHECK(back[0].policy == "aog");
  CHECK(back[0].seed == 7);

  std::istringstream bad("frame,seed\n1,2\n");
  CHECK_THROWS(read_metrics(bad));

  CHECK(format_float(0.1) == "0.1");
  CHECK(format_float(1234567.0) == "1.23457e+06");
}

TEST_CASE("metrics of a real run round-trip through CSV at 6 digits") {
  ExperimentConfig cfg = small_config();
  cfg.task.kind = TaskKind::Classification;
  const auto rows = metrics_rows(cfg, run_experiment(cfg, 1));
  std::ostringstream out;
  write_metrics(rows, out);
  std::istringstream in(out.str());
  const auto back = read_metrics(in);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].metrics.frame == rows[i].metrics.frame);
    CHECK(back[i].metrics.loss == doctest::Approx(rows[i].metrics.loss).epsilon(1e-5));
    CHECK(back[i].metrics.accuracy.has_value());
    CHECK(back[i].metrics.success_slots == rows[i].metrics.success_slots);
  }
  const auto js = metrics_to_json(rows);
  CHECK(js.size() == rows.size());
  CHECK(js[0].contains("global_grad_norm"));
}

TEST_CASE("metrics write failure names the path") {
  const std::filesystem::path path = "/nonexistent-dir/rachfl/out.csv";
  CHECK_THROWS_WITH_AS(write_metrics(std::vector<MetricsRow>{}, path),
                       doctest::Contains(path.string().c_str()), std::runtime_error);
}

TEST_CASE("run summary") {
  std::vector<MetricsRow> rows;
  for (std::uint64_t seed : {1, 2})
    for (std::size_t f = 1; f <= 3; ++f) {
      MetricsRow r{seed, "genie", 5, 0.5, {}};
      r.metrics.frame = f;
      r.metrics.loss = f == 3 ? (seed == 1 ? 1.0 : 3.0) : 9.0;
      rows.push_back(r);
    }
  const auto s = summarize(rows);
  CHECK(s.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(s.final_loss_mean == doctest::Approx(2.0));
  CHECK(s.final_loss_std == doctest::Approx(std::sqrt(2.0)));
  CHECK_FALSE(s.final_accuracy_mean.has_value());
  const auto j = summary_to_json(s);
  for (const char* key : {"policy", "K", "gamma", "seeds", "final_loss_mean", "final_loss_std", "final_accuracy_mean"})
    CHECK(j.contains(key));
}

TEST_CASE("grid parsing") {
  const auto g = parse_grid("slots=1,5;policy.kind=aog,genie");
  REQUIRE(g.size() == 2);
  CHECK(g[0].key == "slots");
  CHECK(g[0].values == std::vector<json>{1, 5});
  CHECK(g[1].values == std::vector<json>{"aog", "genie"});

  const auto j = parse_grid(R"({"gamma": [0, 0.5]})");
  REQUIRE(j.size() == 1);
  CHECK(j[0].values == std::vector<json>{0, 0.5});

  CHECK(expand_grid({}).size() == 1);
  const auto pts = expand_grid(g);
  REQUIRE(pts.size() == 4);
  CHECK(pts[1] == GridCoords{{"slots", 1}, {"policy.kind", "genie"}});

  CHECK_THROWS_AS(parse_grid("slots"), ConfigError);
  CHECK_THROWS_AS(parse_grid("slots=1,,2"), ConfigError);
  CHECK_THROWS_AS(parse_grid(R"({"slots": []})"), ConfigError);
}

TEST_CASE("sweep points equal standalone runs") {
  const auto base = small_config();
  const auto empty = sweep(base, {}, 1);
  REQUIRE(empty.points.size() == 1);
  CHECK(empty.points[0].rows.size() == 8);

  const auto grid = parse_grid("slots=1,5;gamma=0,1");
  const auto result = sweep(base, grid, 1);
  REQUIRE(result.points.size() == 4);
  auto cfg = base;
  cfg.slots = 5;
  cfg.gamma = 0;
  std::vector<MetricsRow> expected;
  for (auto seed : cfg.seeds) {
    const auto rows = metrics_rows(cfg, run_experiment(cfg, seed));
    expected.insert(expected.end(), rows.begin(), rows.end());
  }
  CHECK(result.points[2].rows == expected);

  std::ostringstream one, eight;
  write_sweep_csv(result, one);
  write_sweep_csv(sweep(base, grid, 8), eight);
  CHECK(one.str() == eight.str());
  CHECK(one.str().rfind("point,slots,gamma,frame,seed,", 0) == 0);
}

TEST_CASE("a failing sweep point does not stop the others") {
  const auto result = sweep(small_config(), parse_grid("slots=5,50"), 2);
  REQUIRE(result.points.size() == 2);
  CHECK(result.points[0].errors.empty());
  CHECK_FALSE(result.points[0].rows.empty());
  CHECK_FALSE(result.points[1].errors.empty());
  CHECK(result.points[1].rows.empty());

  CHECK_THROWS_AS(sweep(small_config(), parse_grid("slotz=1,2"), 1), ConfigError);
}
