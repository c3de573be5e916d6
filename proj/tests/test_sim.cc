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

#include <algorithm>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "mdgan/experiment.h"
#include "mdgan/random.h"
#include "test_util.h"

namespace mdgan::sim {
namespace {

using mdgan::testing::tiny_config;

nn::NetworkShape small_d_shape() {
  nn::NetworkShape s;
  s.dims = {2, 6, 1};
  s.output = nn::OutputActivation::kSigmoid;
  return s;
}

nn::MlpNetwork random_d(uint64_t tag) {
  Rng r = make_rng(77, {tag});
  return nn::kaiming_init(small_d_shape(), r);
}

data::ClientShard tiny_shard(int id) {
  data::ClientShard shard;
  shard.client_id = id;
  shard.points = Matrix::Constant(8, 2, 0.5 * (id + 1));
  shard.mode_labels.assign(8, 0);
  return shard;
}

// Clients 0..n_benign-1 benign, the rest free-riders; every model distinct.
std::vector<Client> make_clients(int n_benign, int n_free) {
  std::vector<Client> clients;
  for (int i = 0; i < n_benign; ++i)
    clients.push_back(Client::benign(i, tiny_shard(i), random_d(i),
                                     nn::OptimizerState(nn::OptimizerKind::kAdam, 1e-3)));
  for (int i = n_benign; i < n_benign + n_free; ++i)
    clients.push_back(Client::free_rider(i, random_d(i)));
  return clients;
}

// Hands client `id` a distance row whose 2-means gate admits exactly `allowed`.
void give_gate(std::vector<Client>& clients, int id, const std::set<int>& allowed) {
  const int n = static_cast<int>(clients.size());
  Vector row(n);
  std::vector<int> index_to_client(n);
  for (int j = 0; j < n; ++j) {
    index_to_client[j] = j;
    row(j) = j == id ? 0.0 : (allowed.count(j) ? 1.0 : 50.0);
  }
  const gan::LossMode loss;
  Envelope env{kGeneratorEndpoint, id, 1, -1, DistanceRowMsg{id, row, index_to_client}};
  EXPECT_TRUE(clients[id].handle(env, loss, 0).empty());
}

TEST(Network, PerChannelFifo) {
  Network net;
  for (int k = 0; k < 3; ++k) net.send({kGeneratorEndpoint, 2, 1, k, SwapProposalMsg{k}});
  net.send({1, 2, 1, 0, SwapProposalMsg{9}});
  EXPECT_EQ(net.pending(), 4u);
  for (int k = 0; k < 3; ++k) {
    auto e = net.receive(kGeneratorEndpoint, 2);
    ASSERT_TRUE(e);
    EXPECT_EQ(std::get<SwapProposalMsg>(e->payload).peer, k);
  }
  EXPECT_FALSE(net.receive(kGeneratorEndpoint, 2));
  auto other = net.receive_any(2);
  ASSERT_TRUE(other);
  EXPECT_EQ(other->from, 1);
  EXPECT_EQ(net.pending(), 0u);
  EXPECT_EQ(net.trace().size(), 4u);
}

TEST(Network, ReceiveAnyPrefersLowestSender) {
  Network net;
  net.send({3, 0, 1, 0, SwapProposalMsg{1}});
  net.send({kGeneratorEndpoint, 0, 1, 0, SwapProposalMsg{2}});
  net.send({1, 0, 1, 0, SwapProposalMsg{3}});
  EXPECT_EQ(net.receive_any(0)->from, kGeneratorEndpoint);
  EXPECT_EQ(net.receive_any(0)->from, 1);
  EXPECT_EQ(net.receive_any(0)->from, 3);
}

TEST(Network, RejectsSelfSend) {
  Network net;
  EXPECT_THROW(net.send({4, 4, 1, 0, SwapProposalMsg{0}}), std::invalid_argument);
  EXPECT_EQ(net.pending(), 0u);
}

TEST(Network, TraceHashesPayload) {
  Network a, b;
  a.send({kGeneratorEndpoint, 0, 1, 0, ProbeRequestMsg{Matrix::Constant(2, 2, 1.0)}});
  b.send({kGeneratorEndpoint, 0, 1, 0, ProbeRequestMsg{Matrix::Constant(2, 2, 1.0)}});
  EXPECT_EQ(a.trace(), b.trace());
  b.send({kGeneratorEndpoint, 0, 1, 0, ProbeRequestMsg{Matrix::Constant(2, 2, 1.5)}});
  EXPECT_NE(b.trace()[0].payload_hash, b.trace()[1].payload_hash);
}

TEST(RandomPairing, DisjointAndReplayable) {
  std::vector<int> ids(10);
  for (int i = 0; i < 10; ++i) ids[i] = i;
  Rng r1 = make_rng(5, {1}), r2 = make_rng(5, {1});
  const auto p1 = random_pairing(ids, r1);
  EXPECT_EQ(p1, random_pairing(ids, r2));
  ASSERT_EQ(p1.size(), 5u);
  std::set<int> seen;
  for (auto [a, b] : p1) {
    EXPECT_NE(a, b);
    seen.insert(a);
    seen.insert(b);
  }
  EXPECT_EQ(seen.size(), 10u);
}

TEST(RandomPairing, OddCountLeavesOneOut) {
  Rng r = make_rng(5, {2});
  const auto pairs = random_pairing({0, 1, 2, 3, 4}, r);
  EXPECT_EQ(pairs.size(), 2u);
  Rng r1 = make_rng(5, {3});
  EXPECT_THROW(random_pairing({0}, r1), std::invalid_argument);
}

TEST(SwapPhase, UngatedExchangesModels) {
  auto clients = make_clients(2, 1);
  const nn::MlpNetwork m0 = clients[0].current_model();
  const nn::MlpNetwork m2 = clients[2].current_model();
  Network net;
  const std::vector<std::pair<int, int>> pairs = {{0, 2}};
  const auto records = swap_phase(pairs, clients, false, net, 5);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_TRUE(records[0].executed);
  EXPECT_EQ(records[0].kind_a, ClientKind::kBenign);
  EXPECT_EQ(records[0].kind_b, ClientKind::kFreeRider);
  EXPECT_EQ(clients[0].current_model(), m2);
  ASSERT_TRUE(clients[2].swapped_model());
  EXPECT_EQ(*clients[2].swapped_model(), m0);
  EXPECT_EQ(clients[2].current_model(), m0);
  EXPECT_EQ(clients[2].fake_model(), m2);
  EXPECT_EQ(net.pending(), 0u);
}

TEST(SwapPhase, GateRefusalBlocksExchange) {
  auto clients = make_clients(3, 1);
  give_gate(clients, 0, {1, 2});
  give_gate(clients, 1, {0, 2});
  const nn::MlpNetwork m0 = clients[0].current_model();
  const nn::MlpNetwork m3 = clients[3].current_model();
  Network net;
  const std::vector<std::pair<int, int>> pairs = {{0, 3}};
  const auto records = swap_phase(pairs, clients, true, net, 5);
  EXPECT_FALSE(records[0].executed);
  EXPECT_EQ(clients[0].current_model(), m0);
  EXPECT_EQ(clients[3].current_model(), m3);
  EXPECT_FALSE(clients[3].swapped_model());
}

TEST(SwapPhase, BothBenignMustAgree) {
  auto clients = make_clients(3, 0);
  give_gate(clients, 0, {1});
  give_gate(clients, 1, {2});
  Network net;
  const std::vector<std::pair<int, int>> pairs = {{0, 1}};
  EXPECT_FALSE(swap_phase(pairs, clients, true, net, 5)[0].executed);
  give_gate(clients, 1, {0, 2});
  EXPECT_TRUE(swap_phase(pairs, clients, true, net, 10)[0].executed);
}

TEST(SwapPhase, FreeRidersAlwaysAccept) {
  auto clients = make_clients(1, 2);
  Network net;
  const std::vector<std::pair<int, int>> pairs = {{1, 2}};
  const auto records = swap_phase(pairs, clients, true, net, 5);
  EXPECT_TRUE(records[0].executed);
  EXPECT_EQ(*clients[1].swapped_model(), clients[2].fake_model());
}

TEST(SwapPhase, GatedBenignWithoutRowRefuses) {
  auto clients = make_clients(2, 0);
  Network net;
  const std::vector<std::pair<int, int>> pairs = {{0, 1}};
  EXPECT_FALSE(swap_phase(pairs, clients, true, net, 5)[0].executed);
  EXPECT_TRUE(swap_phase(pairs, clients, false, net, 5)[0].executed);
}

TEST(SwapPhase, RejectsRepeatedClient) {
  auto clients = make_clients(3, 0);
  Network net;
  const std::vector<std::pair<int, int>> pairs = {{0, 1}, {1, 2}};
  EXPECT_THROW(swap_phase(pairs, clients, false, net, 5), std::invalid_argument);
  const std::vector<std::pair<int, int>> unknown = {{0, 7}};
  EXPECT_THROW(swap_phase(unknown, clients, false, net, 5), std::invalid_argument);
}

TEST(SwapPhase, PerfectGateNeverMixesRoles) {
  auto clients = make_clients(4, 4);
  for (int i = 0; i < 4; ++i) {
    std::set<int> peers;
    for (int j = 0; j < 4; ++j)
      if (j != i) peers.insert(j);
    give_gate(clients, i, peers);
  }
  std::vector<int> ids(8);
  for (int i = 0; i < 8; ++i) ids[i] = i;
  Network net;
  for (int round = 1; round <= 20; ++round) {
    Rng r = make_rng(3, {static_cast<uint64_t>(round)});
    const auto pairs = random_pairing(ids, r);
    for (const auto& rec : swap_phase(pairs, clients, true, net, round)) {
      const bool mixed = rec.kind_a != rec.kind_b;
      EXPECT_EQ(rec.executed, !mixed);
    }
  }
}

TEST(ClientRound, FreeRiderSkipsTrainingAndFeedbackIsDeterministic) {
  auto clients = make_clients(1, 1);
  Rng r = make_rng(1, {4});
  const Matrix batch = Matrix::Random(8, 2);
  const std::vector<Matrix> d_batches = {batch};
  const gan::LossMode loss;
  const nn::MlpNetwork before = clients[1].current_model();
  const auto fb1 = client_round(clients[1], d_batches, batch, loss, 1, 9);
  const auto fb2 = client_round(clients[1], d_batches, batch, loss, 1, 9);
  EXPECT_EQ(clients[1].discriminator_steps(), 0);
  EXPECT_EQ(clients[1].current_model(), before);
  EXPECT_EQ(fb1.input_grads, fb2.input_grads);
  EXPECT_EQ(fb1.input_grads, gan::generator_feedback(before, batch, loss));
}

TEST(ClientRound, BenignTrainsThenAnswers) {
  auto clients = make_clients(1, 1);
  data::ShardSampler sampler(clients[0].shard(), 8, make_rng(1, {5}));
  clients[0].begin_round(1, sampler);
  const Matrix batch = Matrix::Constant(8, 2, -0.7);
  const std::vector<Matrix> d_batches = {batch, batch};
  const gan::LossMode loss;
  const nn::MlpNetwork before = clients[0].current_model();
  const auto fb = client_round(clients[0], d_batches, batch, loss, 1, 9);
  EXPECT_EQ(clients[0].discriminator_steps(), 2);
  EXPECT_FALSE(clients[0].current_model() == before);
  EXPECT_EQ(fb.input_grads, gan::generator_feedback(clients[0].current_model(), batch, loss));
  const auto fr = client_round(clients[1], d_batches, batch, loss, 1, 9);
  EXPECT_GT((fb.input_grads - fr.input_grads).norm(), 0.0);
}

TEST(ClientRound, BenignNeedsSampler) {
  auto clients = make_clients(1, 0);
  const Matrix batch = Matrix::Zero(8, 2);
  const std::vector<Matrix> d_batches = {batch};
  EXPECT_THROW(client_round(clients[0], d_batches, batch, gan::LossMode{}, 1, 9),
               std::logic_error);
}

TEST(RunExperiment, ZeroRoundsLeavesGeneratorUntouched) {
  ExperimentConfig c = tiny_config();
  c.rounds = 0;
  c.probe_period = 1;
  const ExperimentResult r = run_experiment(c);
  EXPECT_EQ(r.generator, r.initial_generator);
  EXPECT_TRUE(r.round_logs.empty());
  EXPECT_TRUE(r.probes.empty());
  EXPECT_TRUE(r.trace.empty());
  ASSERT_EQ(r.metrics.size(), 1u);
  EXPECT_EQ(r.metrics[0].round, 0);
}

TEST(RunExperiment, SimpleProtocolNeverMovesWeights) {
  ExperimentConfig c = tiny_config();
  c.n_freeriders = 2;
  const ExperimentResult r = run_experiment(c);
  for (const TraceEntry& e : r.trace) {
    EXPECT_NE(e.kind, MessageKind::kModelWeights);
    EXPECT_NE(e.kind, MessageKind::kSwapProposal);
  }
  for (const RoundLog& log : r.round_logs) EXPECT_TRUE(log.swaps.empty());
}

TEST(RunExperiment, FreeRidersNeverTrain) {
  ExperimentConfig c = tiny_config();
  c.n_freeriders = 2;
  const ExperimentResult r = run_experiment(c);
  const int batches = c.batches_per_round() * c.rounds;
  ASSERT_EQ(r.discriminator_steps.size(), 5u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(r.discriminator_steps[i], batches);
  for (int i = 3; i < 5; ++i) EXPECT_EQ(r.discriminator_steps[i], 0);
  EXPECT_EQ(r.free_riders, (std::set<int>{3, 4}));
}

TEST(RunExperiment, FeedbackBarrierPerGeneratorStep) {
  ExperimentConfig c = tiny_config();
  c.n_freeriders = 1;
  c.d_steps_per_g_step = 1;
  const ExperimentResult r = run_experiment(c);
  const int g_steps = c.batches_per_round();
  for (const RoundLog& log : r.round_logs) EXPECT_EQ(log.generator_updates, g_steps);
  // Each generator step collects exactly one feedback per client.
  std::map<std::pair<int, int>, int> feedback;
  for (const TraceEntry& e : r.trace)
    if (e.kind == MessageKind::kGradientFeedback) ++feedback[{e.round, e.batch}];
  EXPECT_EQ(feedback.size(), static_cast<size_t>(c.rounds * g_steps));
  for (const auto& [key, n] : feedback) EXPECT_EQ(n, 4);
}

TEST(RunExperiment, ProbeReplacesFirstGeneratorBatch) {
  ExperimentConfig c = tiny_config();
  c.n_freeriders = 1;
  c.defense = Defense::kDfg;
  const ExperimentResult r = run_experiment(c);
  ASSERT_EQ(r.probes.size(), 2u);
  EXPECT_EQ(r.probes[0].round, 2);
  EXPECT_EQ(r.probes[1].round, 4);
  for (const ProbeEvent& p : r.probes) {
    EXPECT_EQ(p.probe_samples.rows(), c.probe_size);
    ASSERT_EQ(p.responses.size(), 4u);
    for (const auto& resp : p.responses) EXPECT_EQ(resp.scores.size(), c.probe_size);
    ASSERT_TRUE(p.detector_response);
  }
  int probe_requests = 0, generator_batches = 0;
  for (const TraceEntry& e : r.trace) {
    if (e.kind == MessageKind::kProbeRequest) ++probe_requests;
    if (e.kind == MessageKind::kFakeBatch && e.round == 2 && e.batch == 4)
      ++generator_batches;
  }
  EXPECT_EQ(probe_requests, 2 * 4);
  // Round 2's only G batch is batch 4 and the probe stands in for it, so the
  // clients get just their discriminator batch there.
  EXPECT_EQ(generator_batches, 4);
  for (const RoundLog& log : r.round_logs) EXPECT_EQ(log.generator_updates, 1);
}

TEST(RunExperiment, ExcludedClientsFollowLatestDetection) {
  ExperimentConfig c = tiny_config();
  c.n_freeriders = 2;
  c.defense = Defense::kDfg;
  const ExperimentResult r = run_experiment(c);
  EXPECT_TRUE(r.round_logs[0].excluded.empty());
  EXPECT_EQ(r.round_logs[1].excluded, r.probes[0].detection.flagged);
  EXPECT_EQ(r.round_logs[2].excluded, r.probes[0].detection.flagged);
  EXPECT_EQ(r.round_logs[3].excluded, r.probes[1].detection.flagged);
}

TEST(RunExperiment, DfgPlusSendsDistanceRowsAndRecordsGates) {
  ExperimentConfig c = tiny_config();
  c.n_freeriders = 2;
  c.protocol = Protocol::kSwap;
  c.defense = Defense::kDfgPlus;
  const ExperimentResult r = run_experiment(c);
  int rows = 0;
  for (const TraceEntry& e : r.trace) rows += e.kind == MessageKind::kDistanceRow;
  EXPECT_EQ(rows, 2 * 5);
  for (const ProbeEvent& p : r.probes) {
    ASSERT_TRUE(p.distance_matrix);
    EXPECT_EQ(p.distance_matrix->rows(), 6);
    EXPECT_EQ(p.gates.size(), 3u);
  }
  for (const RoundLog& log : r.round_logs)
    for (const auto& s : log.swaps) {
      if (!s.executed) continue;
      for (auto [id, kind] : {std::pair{s.client_a, s.kind_a}, std::pair{s.client_b, s.kind_b}})
        EXPECT_EQ(kind == ClientKind::kFreeRider, r.free_riders.count(id) == 1);
    }
}

TEST(RunExperiment, SwapProtocolSwapsEveryPeriod) {
  ExperimentConfig c = tiny_config();
  c.n_freeriders = 1;
  c.protocol = Protocol::kSwap;
  const ExperimentResult r = run_experiment(c);
  for (const RoundLog& log : r.round_logs) {
    if (log.round % c.swap_period == 0) {
      EXPECT_EQ(log.swaps.size(), 2u);
      for (const auto& s : log.swaps) EXPECT_TRUE(s.executed);
    } else {
      EXPECT_TRUE(log.swaps.empty());
    }
  }
}

TEST(RunExperiment, DefenseTimeOnlyOnProbeRounds) {
  ExperimentConfig c = tiny_config();
  c.n_freeriders = 1;
  const ExperimentResult none = run_experiment(c);
  for (const RoundLog& log : none.round_logs) {
    EXPECT_EQ(log.defense_ms, 0.0);
    EXPECT_GT(log.train_ms, 0.0);
  }
  c.defense = Defense::kDfg;
  const ExperimentResult dfg = run_experiment(c);
  for (const RoundLog& log : dfg.round_logs) {
    if (log.round % c.probe_period == 0)
      EXPECT_GT(log.defense_ms, 0.0);
    else
      EXPECT_EQ(log.defense_ms, 0.0);
  }
}

TEST(RunExperiment, DeterministicInSeed) {
  ExperimentConfig c = tiny_config();
  c.n_freeriders = 2;
  c.protocol = Protocol::kSwap;
  c.defense = Defense::kDfgPlus;
  const ExperimentResult a = run_experiment(c);
  const ExperimentResult b = run_experiment(c);
  EXPECT_EQ(a.generator, b.generator);
  EXPECT_EQ(a.trace, b.trace);
  ASSERT_EQ(a.metrics.size(), b.metrics.size());
  for (size_t i = 0; i < a.metrics.size(); ++i)
    EXPECT_EQ(a.metrics[i].frechet_distance, b.metrics[i].frechet_distance);
  c.seed = 2;
  EXPECT_FALSE(run_experiment(c).generator == a.generator);
}

TEST(RunExperiment, MetricsCadence) {
  ExperimentConfig c = tiny_config();
  c.rounds = 5;
  c.metrics_period = 2;
  const ExperimentResult r = run_experiment(c);
  std::vector<int> rounds;
  for (const auto& m : r.metrics) rounds.push_back(m.round);
  EXPECT_EQ(rounds, (std::vector<int>{0, 2, 4, 5}));
}

TEST(RunExperiment, FreeRiderReinitChangesFeedback) {
  ExperimentConfig c = tiny_config();
  c.n_freeriders = 1;
  const ExperimentResult fixed = run_experiment(c);
  c.freerider_reinit_every_round = true;
  const ExperimentResult fresh = run_experiment(c);
  EXPECT_EQ(fixed.round_logs[0].d_loss, fresh.round_logs[0].d_loss);
  EXPECT_FALSE(fixed.generator == fresh.generator);
}

TEST(RoundLogJsonl, OneObjectPerRound) {
  ExperimentConfig c = tiny_config();
  c.n_freeriders = 1;
  c.defense = Defense::kDfg;
  const ExperimentResult r = run_experiment(c);
  const std::string path = mdgan::testing::scratch_dir("roundlog") + "/roundlog.jsonl";
  write_round_log_jsonl(r.round_logs, path, false);
  const std::string text = mdgan::testing::read_file(path);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), c.rounds);
  EXPECT_EQ(text.find("defense_ms"), std::string::npos);
  EXPECT_NE(text.find("\"flagged\""), std::string::npos);
}

}  // namespace
}  // namespace mdgan::sim
