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

#include "rachfl/fedloop.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace rachfl {

LocalGradient local_gradient(UserState& user, std::span<const double> w, std::size_t batch, Stream& rng) {
  require_same_dim(user.memory.size(), w.size(), "local_gradient");
  LocalGradient out;
  out.gradient = stochastic_gradient(w, user.shard, batch, rng);
  out.corrected.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out.corrected[i] = out.gradient[i] + user.memory[i];
  out.local_norm = norm2(out.corrected);
  user.last_local_norm = out.local_norm;
  return out;
}

SparseUpdate compress(std::span<const double> v, std::size_t slot_cap, const CompressionConfig& cfg,
                      Stream& rng) {
  if (slot_cap < 1) throw std::invalid_argument("compress: slot capacity must be >= 1");
  return cfg.kind == Sparsifier::TopK ? top_k(v, slot_cap) : rand_k(v, slot_cap, rng, cfg.rescale_rand_k);
}

UserFrameStep user_frame_step(UserState& user, std::span<const double> w, const BroadcastParams& bp,
                              std::size_t batch, std::size_t slot_cap, Stream& rng,
                              const CompressionConfig& compression, Stream* compress_rng) {
  auto local = local_gradient(user, w, batch, rng);
  UserFrameStep out;
  out.active = apply_threshold(local.local_norm, bp.threshold);
  if (out.active) out.payload = compress(local.corrected, slot_cap, compression, compress_rng ? *compress_rng : rng);
  out.gradient = std::move(local.gradient);
  return out;
}

void memory_update(UserState& user, bool delivered, std::span<const double> gradient,
                   const SparseUpdate* payload, double gamma) {
  require_same_dim(user.memory.size(), gradient.size(), "memory_update");
  if (delivered && !payload) throw std::invalid_argument("memory_update: delivered user has no payload");
  for (std::size_t i = 0; i < gradient.size(); ++i) user.memory[i] = gamma * user.memory[i] + gradient[i];
  if (delivered) scatter_add(user.memory, *payload, -1.0);
}

Vector ps_aggregate(std::span<const double> w, std::span<const SparseUpdate> payloads, double learning_rate,
                    AggregateMode mode) {
  Vector out(w.begin(), w.end());
  if (payloads.empty()) return out;
  Vector sum(w.size(), 0.0);
  for (const auto& p : payloads) scatter_add(sum, p, 1.0);
  const double step = mode == AggregateMode::Mean ? learning_rate / static_cast<double>(payloads.size())
                                                  : learning_rate;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= step * sum[i];
  return out;
}

RunError::RunError(std::size_t frame, const std::string& what)
    : std::runtime_error("frame " + std::to_string(frame) + ": " + what), frame_(frame) {}

namespace {

ModelSummary summarize_model(std::span<const double> w) { return {norm2(w), hash_vector(w)}; }

struct TaskData {
  Dataset train;
  Dataset test;
  Vector w_true;
};

TaskData make_task(const TaskConfig& t, const StreamKey& root) {
  const std::size_t total = t.points + t.test_points;
  const std::uint64_t seed = root.child("data").digest();
  Dataset all;
  TaskData out;
  if (t.kind == TaskKind::Regression) {
    auto rd = make_regression(t.features, total, t.noise, seed);
    all = std::move(rd.data);
    out.w_true = std::move(rd.w_true);
  } else {
    all = make_classification(t.features, t.classes, total, t.separation, seed);
  }
  std::vector<std::size_t> rows(total);
  for (std::size_t j = 0; j < total; ++j) rows[j] = j;
  out.train = all.subset(std::span(rows).first(t.points));
  out.test = all.subset(std::span(rows).subspan(t.points));
  return out;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, const FrameObserver& observer) {
  const StreamKey root(seed);
  const std::size_t dim = cfg.model_dim();
  const std::size_t num_users = cfg.users;
  const ChannelConfig channel = cfg.channel_config();
  const std::size_t cap = cfg.slot_capacity();
  const bool classify = cfg.task.kind == TaskKind::Classification;

  TaskData task = make_task(cfg.task, root);
  auto shards = shard(task.train, num_users, root.child("shard").digest(), cfg.task.label_skew);

  RunResult result;
  result.seed = seed;
  result.w_true = task.w_true;
  auto& users = result.users;
  for (std::size_t u = 0; u < num_users; ++u)
    users.push_back(UserState{static_cast<UserId>(u), std::move(shards[u]), Vector(dim, 0.0), 0.0});

  Vector w(dim, 0.0);
  result.initial_model = w;
  AogController aog(cfg.policy.aog);
  std::optional<double> last_aggregate_norm;

  for (std::size_t n = 0; n < cfg.frames; ++n) {
    try {
      const StreamKey fk = root.child("frame", n);
      const double lr = cfg.learning_rate_at(n);
      FrameRecord rec;
      rec.frame = n + 1;
      rec.model_before = summarize_model(w);

      std::vector<LocalGradient> local(num_users);
      std::vector<double> norms(num_users);
      Vector mean_grad(dim, 0.0);
      for (std::size_t u = 0; u < num_users; ++u) {
        Stream rng = fk.child("user", u).child("batch").open();
        local[u] = local_gradient(users[u], w, cfg.task.batch, rng);
        norms[u] = local[u].local_norm;
        for (std::size_t i = 0; i < dim; ++i) mean_grad[i] += local[u].gradient[i];
      }
      for (auto& x : mean_grad) x /= static_cast<double>(num_users);
      const double global_norm = norm2(mean_grad);

      std::vector<std::optional<SparseUpdate>> payloads(num_users);
      auto payload = [&](std::size_t u) -> const SparseUpdate& {
        if (!payloads[u]) {
          Stream rng = fk.child("user", u).child("compress").open();
          payloads[u] = compress(local[u].corrected, cap, cfg.compression, rng);
        }
        return *payloads[u];
      };

      switch (cfg.policy.kind) {
        case PolicyKind::FixedRandom: {
          const std::size_t m = cfg.policy.active == 0 ? num_users : cfg.policy.active;
          Stream rng = fk.child("select").open();
          auto sel = select_fixed_random(num_users, m, rng);
          rec.active = std::move(sel.active);
          rec.broadcast = {0.0, cfg.policy.tx_prob.value_or(sel.tx_prob), m};
          break;
        }
        case PolicyKind::Aog: {
          const bool use_last = cfg.policy.global_signal == GlobalSignal::LastAggregate && last_aggregate_norm;
          rec.broadcast = aog.broadcast(use_last ? *last_aggregate_norm : global_norm, norms);
          for (std::size_t u = 0; u < num_users; ++u)
            if (apply_threshold(norms[u], rec.broadcast.threshold)) rec.active.push_back(static_cast<UserId>(u));
          break;
        }
        case PolicyKind::Genie: {
          const ProbeEval eval = [&](std::span<const UserId>, const FrameOutcome& outcome) {
            std::vector<SparseUpdate> got;
            for (UserId u : outcome.received) got.push_back(payload(u));
            const auto e = evaluate(ps_aggregate(w, got, lr, cfg.aggregate), task.test);
            return classify ? *e.accuracy : e.loss;
          };
          auto genie = genie_select(norms, cfg.policy.probes, channel, eval,
                                    classify ? MetricSense::Maximize : MetricSense::Minimize, fk.child("genie"));
          rec.active = genie.active;
          double threshold = norms[genie.active.front()];
          for (UserId u : genie.active) threshold = std::min(threshold, norms[u]);
          rec.broadcast = {threshold, genie.tx_prob, genie.count()};
          rec.genie = std::move(genie);
          break;
        }
      }

      if (cfg.channel == ChannelModel::Perfect) {
        rec.outcome = perfect_frame(rec.active, channel);
      } else {
        Stream rng = fk.child("channel").open();
        rec.outcome = simulate_frame(rec.active, rec.broadcast.tx_prob, channel, rng);
      }

      for (std::size_t u = 0; u < num_users; ++u) {
        const auto id = static_cast<UserId>(u);
        const bool active = std::binary_search(rec.active.begin(), rec.active.end(), id);
        const bool delivered =
            cfg.kn_semantics == KnSemantics::Received ? rec.outcome.was_received(id) : active;
        memory_update(users[u], delivered, local[u].gradient, active ? &payload(u) : nullptr, cfg.gamma);
        if (!all_finite(users[u].memory)) throw std::runtime_error("non-finite memory for user " + std::to_string(u));
      }

      std::vector<SparseUpdate> received;
      for (UserId u : rec.outcome.received) received.push_back(payload(u));
      Vector next = ps_aggregate(w, received, lr, cfg.aggregate);
      if (!all_finite(next)) throw std::runtime_error("model update produced a non-finite entry");
      if (!received.empty()) {
        Vector avg(dim, 0.0);
        for (const auto& p : received) scatter_add(avg, p, 1.0 / static_cast<double>(received.size()));
        last_aggregate_norm = norm2(avg);
      }
      w = std::move(next);
      rec.model_after = summarize_model(w);

      const auto eval = evaluate(w, task.test);
      auto& m = rec.metrics;
      m.frame = rec.frame;
      m.loss = eval.loss;
      m.accuracy = eval.accuracy;
      m.active_users = rec.active.size();
      m.received_users = rec.outcome.received.size();
      m.success_slots = rec.outcome.count(SlotKind::Success);
      m.collision_slots = rec.outcome.count(SlotKind::Collision);
      m.idle_slots = rec.outcome.count(SlotKind::Idle);
      double norm_sum = 0.0;
      for (double x : norms) norm_sum += x;
      m.mean_local_norm = norm_sum / static_cast<double>(num_users);
      m.global_grad_norm = global_norm;

      result.frames.push_back(std::move(rec));
      if (observer) observer(result.frames.back(), w, users);
    } catch (const RunError&) {
      throw;
    } catch (const std::exception& e) {
      throw RunError(n + 1, e.what());
    }
  }
  result.final_model = std::move(w);
  return result;
}

std::vector<MetricsRow> metrics_rows(const ExperimentConfig& cfg, const RunResult& run) {
  std::vector<MetricsRow> rows;
  rows.reserve(run.frames.size());
  const std::string label = cfg.policy_label();
  for (const auto& f : run.frames) rows.push_back({run.seed, label, cfg.slots, cfg.gamma, f.metrics});
  return rows;
}

}  // namespace rachfl
