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

#include "rachfl/config.hpp"

#include <cmath>
#include <set>
#include <string>
#include <utility>

namespace rachfl {

using nlohmann::json;

namespace {

template <typename E>
using EnumTable = std::initializer_list<std::pair<const char*, E>>;

const EnumTable<PolicyKind> kPolicyKinds = {
    {"aog", PolicyKind::Aog}, {"fixed_random", PolicyKind::FixedRandom}, {"genie", PolicyKind::Genie}};
const EnumTable<GlobalSignal> kSignals = {{"mean_gradient", GlobalSignal::MeanGradient},
                                          {"last_aggregate", GlobalSignal::LastAggregate}};
const EnumTable<KnSemantics> kKn = {{"received", KnSemantics::Received}, {"active", KnSemantics::Active}};
const EnumTable<AggregateMode> kAggregate = {{"sum", AggregateMode::Sum}, {"mean", AggregateMode::Mean}};
const EnumTable<ChannelModel> kChannel = {{"slotted_aloha", ChannelModel::SlottedAloha},
                                          {"perfect", ChannelModel::Perfect}};
const EnumTable<Sparsifier> kSparsifier = {{"top_k", Sparsifier::TopK}, {"rand_k", Sparsifier::RandK}};
const EnumTable<TaskKind> kTask = {{"regression", TaskKind::Regression},
                                   {"classification", TaskKind::Classification}};

template <typename E>
const char* enum_name(EnumTable<E> table, E value) {
  for (const auto& [name, v] : table)
    if (v == value) return name;
  return "?";
}

/// Walks one JSON object, converting known keys and remembering which keys
/// were consumed so the rest can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path, std::vector<std::string>& issues)
      : obj_(obj), path_(std::move(path)), issues_(issues) {
    if (!obj_.is_object()) issue(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const char* key) {
    if (!obj_.is_object()) return nullptr;
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  template <typename T>
  void read(const char* key, T& out) {
    const json* v = find(key);
    if (!v) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v->is_boolean()) return issue(key_path(key), "expected true or false");
      out = v->get<bool>();
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (!v->is_number_unsigned()) return issue(key_path(key), "expected a non-negative integer");
      out = static_cast<T>(v->get<std::uint64_t>());
    } else if constexpr (std::is_integral_v<T>) {
      if (!v->is_number_integer()) return issue(key_path(key), "expected an integer");
      out = static_cast<T>(v->get<std::int64_t>());
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v->is_number()) return issue(key_path(key), "expected a number");
      out = v->get<double>();
    } else {
      if (!v->is_string()) return issue(key_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  template <typename T>
  void read(const char* key, std::optional<T>& out) {
    const json* v = find(key);
    if (!v) return;
    if (v->is_null()) {
      out.reset();
      return;
    }
    T tmp{};
    seen_.erase(key);
    read(key, tmp);
    out = tmp;
  }

  template <typename E>
  void read_enum(const char* key, E& out, EnumTable<E> table) {
    const json* v = find(key);
    if (!v) return;
    if (v->is_string())
      for (const auto& [name, value] : table)
        if (*v == name) {
          out = value;
          return;
        }
    std::string allowed;
    for (const auto& [name, value] : table) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    issue(key_path(key), "expected one of " + allowed);
  }

  void finish() {
    if (!obj_.is_object()) return;
    for (const auto& [key, value] : obj_.items())
      if (!seen_.count(key)) issue(key_path(key.c_str()), "unknown key");
  }

  void issue(const std::string& where, const std::string& what) { issues_.push_back(where + ": " + what); }

 private:
  const json& obj_;
  std::string path_;
  std::vector<std::string>& issues_;
  std::set<std::string> seen_;
};

void validate(const ExperimentConfig& c, std::vector<std::string>& issues) {
  auto fail = [&](const std::string& key, const std::string& what) { issues.push_back(key + ": " + what); };
  const auto& t = c.task;

  if (c.users < 1) fail("users", "must be >= 1");
  if (c.slots < 1) fail("slots", "must be >= 1");
  if (!(c.gamma >= 0.0 && c.gamma <= 1.0)) fail("gamma", "must lie in [0, 1]");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) fail("learning_rate", "must be > 0");
  if (!(c.lr_decay >= 0.0)) fail("lr_decay", "must be >= 0");
  if (c.seeds.empty()) fail("seeds", "must list at least one seed");

  if (t.features < 1) fail("task.features", "must be >= 1");
  if (t.kind == TaskKind::Classification && t.classes < 2) fail("task.classes", "must be >= 2");
  if (t.kind == TaskKind::Regression && t.points < t.features)
    fail("task.points", "must be >= task.features for a well-posed regression");
  if (c.users >= 1 && t.points % c.users != 0)
    fail("task.points", std::to_string(t.points) + " does not split evenly over " + std::to_string(c.users) +
                            " users");
  if (c.users >= 1 && (t.batch < 1 || t.batch > t.points / c.users))
    fail("task.batch", "must lie in [1, points / users]");
  if (t.test_points < 1) fail("task.test_points", "must be >= 1");
  if (!(t.noise >= 0.0)) fail("task.noise", "must be >= 0");
  if (!(t.separation >= 0.0)) fail("task.separation", "must be >= 0");
  if (!(t.label_skew >= 0.0)) fail("task.label_skew", "must be >= 0");

  if (c.budget && *c.budget < 1) fail("budget", "must be >= 1");
  if (c.slots >= 1 && c.frame_budget() / c.slots < 1)
    fail("slots", "slot capacity floor(budget / slots) = floor(" + std::to_string(c.frame_budget()) + " / " +
                      std::to_string(c.slots) + ") is 0");
  if (c.channel == ChannelModel::Perfect && static_cast<std::size_t>(std::max(c.slots, 0)) < c.users)
    fail("channel", "perfect channel needs slots >= users");

  const auto& p = c.policy;
  switch (p.kind) {
    case PolicyKind::FixedRandom:
      if (p.active > c.users) fail("policy.active", "must be <= users (" + std::to_string(c.users) + ")");
      if (p.tx_prob && !(*p.tx_prob > 0.0 && *p.tx_prob <= 1.0)) fail("policy.tx_prob", "must lie in (0, 1]");
      break;
    case PolicyKind::Aog:
      if (p.aog.min_active < 1 || p.aog.min_active > c.users) fail("policy.min_active", "must lie in [1, users]");
      if (!(p.aog.slope >= 0.0)) fail("policy.slope", "must be >= 0");
      break;
    case PolicyKind::Genie:
      if (p.probes < 1) fail("policy.probes", "must be >= 1");
      break;
  }
}

}  // namespace

std::size_t ExperimentConfig::model_dim() const {
  return task.kind == TaskKind::Regression ? task.features
                                           : task.features * static_cast<std::size_t>(std::max(task.classes, 0));
}

std::int64_t ExperimentConfig::frame_budget() const {
  return budget ? *budget : static_cast<std::int64_t>(model_dim());
}

ChannelConfig ExperimentConfig::channel_config() const {
  return ChannelConfig{slots, static_cast<double>(frame_budget()), 1.0};
}

std::size_t ExperimentConfig::slot_capacity() const {
  return static_cast<std::size_t>(rachfl::slot_capacity(channel_config()));
}

double ExperimentConfig::learning_rate_at(std::size_t frame) const {
  return learning_rate / (1.0 + lr_decay * static_cast<double>(frame));
}

std::string ExperimentConfig::policy_label() const {
  switch (policy.kind) {
    case PolicyKind::FixedRandom:
      return "fixed_random_" + std::to_string(policy.active == 0 ? users : policy.active);
    case PolicyKind::Aog:
      return "aog";
    case PolicyKind::Genie:
      return "genie";
  }
  return "?";
}

ExperimentConfig config_from_json(const json& j) {
  std::vector<std::string> issues;
  ExperimentConfig c;

  ObjectReader root(j, "", issues);
  root.read("users", c.users);
  root.read("frames", c.frames);
  root.read("slots", c.slots);
  root.read("budget", c.budget);
  root.read("gamma", c.gamma);
  root.read("learning_rate", c.learning_rate);
  root.read("lr_decay", c.lr_decay);
  root.read_enum("aggregate", c.aggregate, kAggregate);
  root.read_enum("kn_semantics", c.kn_semantics, kKn);
  root.read_enum("channel", c.channel, kChannel);
  root.read("output", c.output);

  if (const json* seeds = root.find("seeds")) {
    c.seeds.clear();
    if (!seeds->is_array()) {
      root.issue("seeds", "expected an array of non-negative integers");
    } else {
      for (std::size_t i = 0; i < seeds->size(); ++i) {
        if (!(*seeds)[i].is_number_unsigned())
          root.issue("seeds[" + std::to_string(i) + "]", "expected a non-negative integer");
        else
          c.seeds.push_back((*seeds)[i].get<std::uint64_t>());
      }
    }
  }

  if (const json* pol = root.find("policy")) {
    ObjectReader r(*pol, "policy", issues);
    r.read_enum("kind", c.policy.kind, kPolicyKinds);
    r.read("active", c.policy.active);
    r.read("tx_prob", c.policy.tx_prob);
    r.read("slope", c.policy.aog.slope);
    r.read("min_active", c.policy.aog.min_active);
    r.read("calibrate", c.policy.aog.calibrate);
    r.read_enum("global_signal", c.policy.global_signal, kSignals);
    r.read("probes", c.policy.probes);
    r.finish();
  }

  if (const json* comp = root.find("compression")) {
    ObjectReader r(*comp, "compression", issues);
    r.read_enum("kind", c.compression.kind, kSparsifier);
    r.read("rescale", c.compression.rescale_rand_k);
    r.finish();
  }

  if (const json* task = root.find("task")) {
    ObjectReader r(*task, "task", issues);
    r.read_enum("kind", c.task.kind, kTask);
    r.read("features", c.task.features);
    r.read("classes", c.task.classes);
    r.read("points", c.task.points);
    r.read("test_points", c.task.test_points);
    r.read("noise", c.task.noise);
    r.read("separation", c.task.separation);
    r.read("batch", c.task.batch);
    r.read("label_skew", c.task.label_skew);
    r.finish();
  }
  root.finish();

  if (issues.empty()) validate(c, issues);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("<root>: malformed JSON: ") + e.what()});
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["users"] = c.users;
  j["frames"] = c.frames;
  j["slots"] = c.slots;
  j["budget"] = c.budget ? json(*c.budget) : json(nullptr);
  j["gamma"] = c.gamma;
  j["learning_rate"] = c.learning_rate;
  j["lr_decay"] = c.lr_decay;
  j["aggregate"] = enum_name(kAggregate, c.aggregate);
  j["kn_semantics"] = enum_name(kKn, c.kn_semantics);
  j["channel"] = enum_name(kChannel, c.channel);
  j["policy"] = {{"kind", enum_name(kPolicyKinds, c.policy.kind)},
                 {"active", c.policy.active},
                 {"tx_prob", c.policy.tx_prob ? json(*c.policy.tx_prob) : json(nullptr)},
                 {"slope", c.policy.aog.slope},
                 {"min_active", c.policy.aog.min_active},
                 {"calibrate", c.policy.aog.calibrate},
                 {"global_signal", enum_name(kSignals, c.policy.global_signal)},
                 {"probes", c.policy.probes}};
  j["compression"] = {{"kind", enum_name(kSparsifier, c.compression.kind)},
                      {"rescale", c.compression.rescale_rand_k}};
  j["task"] = {{"kind", enum_name(kTask, c.task.kind)},
               {"features", c.task.features},
               {"classes", c.task.classes},
               {"points", c.task.points},
               {"test_points", c.task.test_points},
               {"noise", c.task.noise},
               {"separation", c.task.separation},
               {"batch", c.task.batch},
               {"label_skew", c.task.label_skew}};
  j["seeds"] = c.seeds;
  j["output"] = c.output;
  return j;
}

std::string serialize_config(const ExperimentConfig& c) { return config_to_json(c).dump(2); }

}  // namespace rachfl
