/*
 * Copyright 2026 The MD-GAN Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mdgan/experiment.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "mdgan/log.h"
#include "mdgan/random.h"

namespace mdgan::sim {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

template <typename T>
T take_payload(std::optional<Envelope> env, int from, const char* what) {
  if (!env)
    throw RunError(std::string("barrier violated: no ") + what + " from client " +
                   std::to_string(from));
  if (auto* msg = std::get_if<T>(&env->payload)) return std::move(*msg);
  throw RunError(std::string("protocol violation: expected ") + what + " from client " +
                 std::to_string(from) + ", got " +
                 to_string(kind_of(env->payload)));
}

std::string context(int round, int batch, int client) {
  std::ostringstream out;
  out << "round " << round;
  if (batch >= 0) out << " batch " << batch;
  if (client >= 0) out << " client " << client;
  return out.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Client

Client Client::benign(int id, data::ClientShard shard, nn::MlpNetwork model,
                      nn::OptimizerState optimizer) {
  Client c;
  c.id_ = id;
  c.kind_ = ClientKind::kBenign;
  c.shard_ = std::move(shard);
  c.model_ = std::move(model);
  c.optimizer_ = std::move(optimizer);
  return c;
}

Client Client::free_rider(int id, nn::MlpNetwork fake_model) {
  Client c;
  c.id_ = id;
  c.kind_ = ClientKind::kFreeRider;
  c.fake_model_ = std::move(fake_model);
  return c;
}

const nn::MlpNetwork& Client::current_model() const {
  if (is_benign()) return model_;
  return swapped_model_ ? *swapped_model_ : fake_model_;
}

const data::ClientShard& Client::shard() const {
  if (!shard_) throw std::logic_error("free-rider " + std::to_string(id_) + " holds no shard");
  return *shard_;
}

void Client::begin_round(int round, const data::ShardSampler& sampler) {
  if (!is_benign()) throw std::logic_error("free-riders have no data to sample");
  round_ = round;
  sampler_ = sampler;
}

void Client::reinitialize_fake_model(nn::MlpNetwork model) {
  if (is_benign()) throw std::logic_error("benign clients have no fake model");
  fake_model_ = std::move(model);
  swapped_model_.reset();
}

std::optional<double> Client::take_mean_d_loss() {
  if (d_loss_count_ == 0) return std::nullopt;
  const double mean = d_loss_sum_ / d_loss_count_;
  d_loss_sum_ = 0.0;
  d_loss_count_ = 0;
  return mean;
}

bool Client::accepts_swap_with(int peer) const {
  if (!is_benign() || !gating_enabled_) return true;
  return gate_ && gate_->count(peer) > 0;
}

void Client::install_swapped_model(nn::MlpNetwork model) {
  if (is_benign()) {
    model_ = std::move(model);
    // Moment estimates belong to the discarded weights.
    optimizer_.reset();
  } else {
    swapped_model_ = std::move(model);
  }
}

std::vector<Envelope> Client::handle(const Envelope& in, const gan::LossMode& loss,
                                     uint64_t seed) {
  std::vector<Envelope> replies;
  auto reply = [&](Message m) {
    replies.push_back({id_, in.from, in.round, in.batch, std::move(m)});
  };
  std::visit(
      [&](const auto& msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, FakeBatchMsg>) {
          if (msg.purpose == BatchPurpose::kDiscriminatorTraining) {
            // Free-riders skip discriminator training entirely.
            if (!is_benign()) return;
            if (!sampler_) throw std::logic_error("begin_round was not called");
            const Matrix real = sampler_->batch(in.batch);
            Rng gp_rng = make_rng(seed, {stream::kGradientPenalty,
                                         static_cast<uint64_t>(id_),
                                         static_cast<uint64_t>(in.round),
                                         static_cast<uint64_t>(in.batch)});
            d_loss_sum_ += gan::discriminator_step(model_, real, msg.samples, loss,
                                                   optimizer_, gp_rng);
            ++d_loss_count_;
            ++d_steps_;
          } else {
            reply(GradientFeedbackMsg{
                gan::generator_feedback(current_model(), msg.samples, loss)});
          }
        } else if constexpr (std::is_same_v<T, ProbeRequestMsg>) {
          Vector scores;
          Matrix grads = gan::generator_feedback(current_model(), msg.samples, loss, &scores);
          reply(ProbeResponseMsg{std::move(scores)});
          reply(GradientFeedbackMsg{std::move(grads)});
        } else if constexpr (std::is_same_v<T, DistanceRowMsg>) {
          if (!is_benign()) return;
          const std::set<int> allowed = defense::client_swap_gate(msg.self_index, msg.row);
          std::set<int> peers;
          for (int idx : allowed) {
            const int peer = msg.index_to_client.at(idx);
            if (peer >= 0) peers.insert(peer);
          }
          gate_ = std::move(peers);
        } else if constexpr (std::is_same_v<T, SwapProposalMsg>) {
          reply(SwapDecisionMsg{msg.peer, accepts_swap_with(msg.peer)});
        } else if constexpr (std::is_same_v<T, ModelWeightsMsg>) {
          install_swapped_model(msg.weights);
        } else {
          throw std::logic_error("client " + std::to_string(id_) + " cannot handle " +
                                 to_string(kind_of(in.payload)));
        }
      },
      in.payload);
  return replies;
}

GradientFeedbackMsg client_round(Client& client,
                                 std::span<const Matrix> discriminator_batches,
                                 const Matrix& generator_batch,
                                 const gan::LossMode& loss, int round,
                                 uint64_t seed) {
  int j = 0;
  for (const Matrix& fake : discriminator_batches) {
    Envelope in{kGeneratorEndpoint, client.id(), round, j++,
                FakeBatchMsg{BatchPurpose::kDiscriminatorTraining, fake}};
    if (!client.handle(in, loss, seed).empty())
      throw std::logic_error("discriminator batches take no reply");
  }
  Envelope in{kGeneratorEndpoint, client.id(), round, j,
              FakeBatchMsg{BatchPurpose::kGeneratorTraining, generator_batch}};
  auto replies = client.handle(in, loss, seed);
  if (replies.size() != 1) throw std::logic_error("expected exactly one feedback");
  return std::get<GradientFeedbackMsg>(std::move(replies.front().payload));
}

// ---------------------------------------------------------------------------
// Pairing and swapping

std::vector<std::pair<int, int>> random_pairing(std::vector<int> ids, Rng& rng) {
  if (ids.size() < 2) throw std::invalid_argument("pairing needs at least 2 clients");
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<std::pair<int, int>> pairs;
  for (size_t k = 0; k + 1 < ids.size(); k += 2) pairs.emplace_back(ids[k], ids[k + 1]);
  return pairs;
}

std::vector<metrics::SwapRecord> swap_phase(std::span<const std::pair<int, int>> pairs,
                                            std::vector<Client>& clients, bool gated,
                                            Network& network, int round) {
  std::set<int> seen;
  for (const auto& [a, b] : pairs) {
    for (int id : {a, b}) {
      if (id < 0 || id >= static_cast<int>(clients.size()))
        throw std::invalid_argument("swap pair names unknown client " + std::to_string(id));
      if (!seen.insert(id).second)
        throw std::invalid_argument("client " + std::to_string(id) +
                                    " appears in more than one swap pair");
    }
  }
  for (Client& c : clients) c.gating_enabled_ = gated;

  const gan::LossMode unused_loss;
  auto deliver = [&](int to) {
    while (auto env = network.receive_any(to))
      for (Envelope& r : clients[to].handle(*env, unused_loss, 0)) network.send(std::move(r));
  };

  std::vector<metrics::SwapRecord> records;
  for (const auto& [a, b] : pairs) {
    network.send({kGeneratorEndpoint, a, round, -1, SwapProposalMsg{b}});
    network.send({kGeneratorEndpoint, b, round, -1, SwapProposalMsg{a}});
    deliver(a);
    deliver(b);
    const auto da = take_payload<SwapDecisionMsg>(network.receive(a, kGeneratorEndpoint), a,
                                                  "swap decision");
    const auto db = take_payload<SwapDecisionMsg>(network.receive(b, kGeneratorEndpoint), b,
                                                  "swap decision");
    const bool executed = da.accept && db.accept;
    if (executed) {
      // Both outgoing models are captured before either side installs.
      network.send({a, b, round, -1, ModelWeightsMsg{clients[a].current_model()}});
      network.send({b, a, round, -1, ModelWeightsMsg{clients[b].current_model()}});
      deliver(a);
      deliver(b);
    }
    records.push_back({round, a, b, clients[a].kind(), clients[b].kind(), executed});
  }
  for (Client& c : clients) c.gating_enabled_ = false;
  return records;
}

// ---------------------------------------------------------------------------
// Orchestration

data::RingDataset make_experiment_dataset(const ExperimentConfig& config) {
  Rng rng = make_rng(config.seed, {stream::kDataset});
  return data::make_ring_dataset(config.modes, config.ring_radius, config.mode_noise_std,
                                 config.shard_size * config.n_benign, rng);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const uint64_t seed = config.seed;
  const auto u = [](int v) { return static_cast<uint64_t>(v); };
  const int total = config.total_clients();
  const nn::AdamParams adam{config.adam_beta1, config.adam_beta2, 1e-8};

  ExperimentResult result;
  const data::RingDataset dataset = make_experiment_dataset(config);
  std::vector<data::ClientShard> shards = data::partition_shards(dataset, config.n_benign);
  const metrics::GaussianFit real_fit = metrics::fit_gaussian(dataset.points);

  Rng g_init = make_rng(seed, {stream::kGeneratorInit});
  nn::MlpNetwork generator = nn::kaiming_init(config.generator_shape(), g_init);
  nn::OptimizerState g_optimizer(config.optimizer, config.g_learning_rate, adam);
  result.initial_generator = generator;

  const nn::NetworkShape d_shape = config.discriminator_shape();
  std::vector<Client> clients;
  clients.reserve(total);
  for (int i = 0; i < config.n_benign; ++i) {
    Rng r = make_rng(seed, {stream::kDiscriminatorInit, u(i)});
    clients.push_back(Client::benign(i, std::move(shards[i]), nn::kaiming_init(d_shape, r),
                                     nn::OptimizerState(config.optimizer,
                                                        config.d_learning_rate, adam)));
  }
  for (int i = config.n_benign; i < total; ++i) {
    Rng r = make_rng(seed, {stream::kFreeRiderInit, u(i), 0});
    clients.push_back(Client::free_rider(i, nn::kaiming_init(d_shape, r)));
    result.free_riders.insert(i);
  }

  Network network;
  const auto evaluate = [&](int round) {
    Rng r = make_rng(seed, {stream::kEvaluation, u(round)});
    const Matrix generated =
        generator.forward(data::sample_latent(config.latent_dim, config.eval_samples, r));
    return metrics::frechet_distance(real_fit, metrics::fit_gaussian(generated),
                                     metrics::kCovarianceRegularization);
  };
  const auto deliver_all = [&](int round, int batch) {
    for (Client& c : clients) {
      while (auto env = network.receive_any(c.id())) {
        try {
          for (Envelope& r : c.handle(*env, config.loss, seed)) network.send(std::move(r));
        } catch (const nn::NonFiniteError& e) {
          throw RunError(context(round, batch, c.id()) + ": " + e.what());
        }
      }
    }
  };

  {
    metrics::MetricsRecord initial;
    initial.round = 0;
    initial.frechet_distance = evaluate(0);
    result.metrics.push_back(initial);
  }

  std::set<int> excluded;
  bool gates_ready = false;
  std::vector<metrics::SwapRecord> all_swaps;
  const int n_batches = config.batches_per_round();

  for (int t = 1; t <= config.rounds; ++t) {
    RoundLog round_log;
    round_log.round = t;
    const bool probe_round = config.defense != Defense::kNone && t % config.probe_period == 0;
    double defense_ms = 0.0;
    const auto round_start = Clock::now();

    if (config.freerider_reinit_every_round && t > 1) {
      for (Client& c : clients) {
        if (c.is_benign()) continue;
        Rng r = make_rng(seed, {stream::kFreeRiderInit, u(c.id()), u(t)});
        c.reinitialize_fake_model(nn::kaiming_init(d_shape, r));
      }
    }
    std::vector<data::ShardSampler> samplers;
    samplers.reserve(config.n_benign);
    for (Client& c : clients) {
      if (!c.is_benign()) continue;
      samplers.emplace_back(c.shard(), config.batch_size,
                            make_rng(seed, {stream::kShardOrder, u(c.id()), u(t)}));
      c.begin_round(t, samplers.back());
    }

    int g_step = 0;
    for (int j = 0; j < n_batches; ++j) {
      for (int i = 0; i < total; ++i) {
        Rng r = make_rng(seed, {stream::kLatentTrain, u(i), u(t), u(j)});
        Matrix fake =
            generator.forward(data::sample_latent(config.latent_dim, config.batch_size, r));
        network.send({kGeneratorEndpoint, i, t, j,
                      FakeBatchMsg{BatchPurpose::kDiscriminatorTraining, std::move(fake)}});
      }
      deliver_all(t, j);
      if ((j + 1) % config.d_steps_per_g_step != 0) continue;

      std::vector<gan::GeneratorContribution> contributions(total);
      for (int i = 0; i < total; ++i) contributions[i].client = i;

      if (probe_round && g_step == 0) {
        // The probe set stands in for this generator batch: every client
        // scores the same samples and its feedback on them trains G.
        const auto probe_start = Clock::now();
        double client_ms = 0.0;
        ProbeEvent event;
        event.round = t;
        const defense::ResponseCollector collect = [&](const defense::ProbeSet& probe) {
          const auto c0 = Clock::now();
          for (int i = 0; i < total; ++i)
            network.send({kGeneratorEndpoint, i, t, j, ProbeRequestMsg{probe.samples}});
          deliver_all(t, j);
          std::vector<defense::ResponseVector> responses;
          for (int i = 0; i < total; ++i) {
            auto resp = take_payload<ProbeResponseMsg>(network.receive(i, kGeneratorEndpoint),
                                                       i, "probe response");
            auto fb = take_payload<GradientFeedbackMsg>(
                network.receive(i, kGeneratorEndpoint), i, "gradient feedback");
            responses.push_back({i, std::move(resp.scores)});
            contributions[i].latent = probe.latent;
            contributions[i].input_grads = std::move(fb.input_grads);
          }
          client_ms += elapsed_ms(c0);
          return responses;
        };

        Rng probe_rng = make_rng(seed, {stream::kProbe, u(t)});
        if (config.defense == Defense::kDfgAdj) {
          const defense::ProbeSet probe =
              defense::make_probe_set(generator, config.probe_size, t, probe_rng);
          event.probe_samples = probe.samples;
          event.responses = collect(probe);
          event.detection = defense::run_dfg_adj(event.responses);
        } else {
          Rng detector_rng = make_rng(seed, {stream::kDetector, u(t)});
          defense::DfgOutcome outcome = defense::run_dfg(
              generator, collect, d_shape, config.probe_size, t, probe_rng, detector_rng);
          event.probe_samples = std::move(outcome.probe.samples);
          event.responses = std::move(outcome.responses);
          event.detector_response = std::move(outcome.detector_response);
          event.detection = std::move(outcome.detection);

          if (config.defense == Defense::kDfgPlus) {
            std::vector<Vector> vectors;
            std::vector<int> index_to_client;
            for (const auto& r : event.responses) {
              vectors.push_back(r.scores);
              index_to_client.push_back(r.client);
            }
            vectors.push_back(*event.detector_response);
            index_to_client.push_back(-1);
            const Matrix v = defense::pairwise_distance_matrix(vectors);
            for (int i = 0; i < total; ++i)
              network.send({kGeneratorEndpoint, i, t, -1,
                            DistanceRowMsg{i, v.row(i).transpose(), index_to_client}});
            deliver_all(t, -1);
            for (const Client& c : clients)
              if (c.is_benign() && c.swap_gate()) event.gates[c.id()] = *c.swap_gate();
            event.distance_matrix = v;
            gates_ready = true;
          }
        }
        excluded = event.detection.flagged;
        round_log.detection = event.detection;
        result.probes.push_back(std::move(event));
        defense_ms += elapsed_ms(probe_start) - client_ms;
      } else {
        for (int i = 0; i < total; ++i) {
          Rng r = make_rng(seed, {stream::kLatentGenerator, u(i), u(t), u(g_step)});
          contributions[i].latent =
              data::sample_latent(config.latent_dim, config.batch_size, r);
          network.send({kGeneratorEndpoint, i, t, j,
                        FakeBatchMsg{BatchPurpose::kGeneratorTraining,
                                     generator.forward(contributions[i].latent)}});
        }
        deliver_all(t, j);
        for (int i = 0; i < total; ++i)
          contributions[i].input_grads =
              take_payload<GradientFeedbackMsg>(network.receive(i, kGeneratorEndpoint), i,
                                                "gradient feedback")
                  .input_grads;
      }
      if (network.pending() != 0)
        throw RunError(context(t, j, -1) + ": stray messages after the feedback barrier");

      std::set<int> included;
      for (int i = 0; i < total; ++i)
        if (!excluded.count(i)) included.insert(i);
      try {
        if (gan::generator_update(generator, contributions, g_optimizer, included,
                                  config.aggregation))
          ++round_log.generator_updates;
        else
          ++round_log.skipped_generator_updates;
      } catch (const nn::NonFiniteError& e) {
        throw RunError(context(t, j, -1) + ": generator update: " + e.what());
      }
      ++g_step;
    }

    for (Client& c : clients)
      if (auto loss = c.take_mean_d_loss()) round_log.d_loss[c.id()] = *loss;

    if (config.protocol == Protocol::kSwap && t % config.swap_period == 0 && total >= 2) {
      const bool gated = config.defense == Defense::kDfgPlus;
      if (gated && !gates_ready) {
        log::debug("round " + std::to_string(t) +
                   ": swap phase deferred until the first distance rows arrive");
      } else {
        std::vector<int> ids(total);
        std::iota(ids.begin(), ids.end(), 0);
        Rng pair_rng = make_rng(seed, {stream::kSwapPairing, u(t)});
        const auto pairs = random_pairing(ids, pair_rng);
        round_log.swaps = swap_phase(pairs, clients, gated, network, t);
        all_swaps.insert(all_swaps.end(), round_log.swaps.begin(), round_log.swaps.end());
      }
    }

    round_log.excluded = excluded;
    round_log.defense_ms = defense_ms;
    round_log.train_ms = elapsed_ms(round_start) - defense_ms;

    const bool record = t % config.metrics_period == 0 || probe_round || t == config.rounds;
    if (record) {
      metrics::MetricsRecord rec;
      rec.round = t;
      rec.frechet_distance = evaluate(t);
      if (round_log.detection) {
        const auto pr = metrics::precision_recall(round_log.detection->flagged,
                                                  result.free_riders);
        rec.precision = pr.precision;
        rec.recall = pr.recall;
      }
      rec.swaps = metrics::swap_action_stats(all_swaps);
      rec.defense_ms = round_log.defense_ms;
      rec.train_ms = round_log.train_ms;
      result.metrics.push_back(rec);
    }
    result.round_logs.push_back(std::move(round_log));
  }

  result.generator = std::move(generator);
  result.trace = network.trace();
  for (const Client& c : clients) result.discriminator_steps.push_back(c.discriminator_steps());
  return result;
}

void write_round_log_jsonl(std::span<const RoundLog> logs, const std::string& path,
                           bool with_timing) {
  using nlohmann::json;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const RoundLog& r : logs) {
    json j;
    j["round"] = r.round;
    json losses = json::object();
    for (const auto& [id, loss] : r.d_loss) losses[std::to_string(id)] = loss;
    j["d_loss"] = losses;
    j["excluded"] = r.excluded;
    if (r.detection) {
      json assignments = json::object();
      for (const auto& [id, cl] : r.detection->cluster_assignment)
        assignments[std::to_string(id)] = cl;
      j["detection"] = {{"round", r.round},
                        {"flagged", r.detection->flagged},
                        {"degenerate", r.detection->degenerate},
                        {"detector_cluster", r.detection->detector_cluster},
                        {"assignments", assignments}};
    } else {
      j["detection"] = nullptr;
    }
    json swaps = json::array();
    for (const auto& s : r.swaps)
      swaps.push_back({{"a", s.client_a},
                       {"b", s.client_b},
                       {"kind_a", to_string(s.kind_a)},
                       {"kind_b", to_string(s.kind_b)},
                       {"executed", s.executed}});
    j["swaps"] = swaps;
    j["generator_updates"] = r.generator_updates;
    j["skipped_generator_updates"] = r.skipped_generator_updates;
    if (with_timing) {
      j["defense_ms"] = r.defense_ms;
      j["train_ms"] = r.train_ms;
    }
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace mdgan::sim
