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

// Round orchestration for MD-GAN training with one central generator and N
// discriminator clients, some of which may be free-riders.

#ifndef MDGAN_EXPERIMENT_H_
#define MDGAN_EXPERIMENT_H_

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdgan/config.h"
#include "mdgan/data.h"
#include "mdgan/defense.h"
#include "mdgan/gan.h"
#include "mdgan/metrics.h"
#include "mdgan/network.h"
#include "mdgan/nn.h"
#include "mdgan/roles.h"

namespace mdgan::sim {

// One participant. Benign clients own a shard and train their discriminator;
// free-riders own no data and answer every request with a random (or
// swapped-in) discriminator.
class Client {
 public:
  static Client benign(int id, data::ClientShard shard, nn::MlpNetwork model,
                       nn::OptimizerState optimizer);
  static Client free_rider(int id, nn::MlpNetwork fake_model);

  int id() const { return id_; }
  ClientKind kind() const { return kind_; }
  bool is_benign() const { return kind_ == ClientKind::kBenign; }

  // The discriminator this client answers with right now.
  const nn::MlpNetwork& current_model() const;

  const data::ClientShard& shard() const;
  const std::optional<nn::MlpNetwork>& swapped_model() const { return swapped_model_; }
  const nn::MlpNetwork& fake_model() const { return fake_model_; }

  // Swap gate from the latest distance row (benign only; empty until a row
  // arrives).
  const std::optional<std::set<int>>& swap_gate() const { return gate_; }

  // Installs the per-round mini-batch order over the shard (benign only).
  void begin_round(int round, const data::ShardSampler& sampler);

  // Free-riders: replaces the random model and forgets any swapped one.
  void reinitialize_fake_model(nn::MlpNetwork model);

  // Handles one incoming message and returns the replies to send. `seed`
  // seeds the gradient-penalty interpolation draws.
  std::vector<Envelope> handle(const Envelope& in, const gan::LossMode& loss,
                               uint64_t seed);

  // Mean discriminator loss over the steps since the last call.
  std::optional<double> take_mean_d_loss();

  // Number of discriminator_step calls ever made (free-riders stay at 0).
  long discriminator_steps() const { return d_steps_; }

  bool accepts_swap_with(int peer) const;
  void install_swapped_model(nn::MlpNetwork model);

 private:
  Client() = default;

  int id_ = 0;
  ClientKind kind_ = ClientKind::kBenign;
  std::optional<data::ClientShard> shard_;
  nn::MlpNetwork model_;
  nn::OptimizerState optimizer_;
  nn::MlpNetwork fake_model_;
  std::optional<nn::MlpNetwork> swapped_model_;
  std::optional<data::ShardSampler> sampler_;
  std::optional<std::set<int>> gate_;
  bool gating_enabled_ = false;
  int round_ = 0;
  double d_loss_sum_ = 0.0;
  int d_loss_count_ = 0;
  long d_steps_ = 0;

  friend std::vector<metrics::SwapRecord> swap_phase(
      std::span<const std::pair<int, int>>, std::vector<Client>&, bool, Network&, int);
};

// One client's share of a round outside the orchestrator: benign clients
// train on each discriminator batch (paired with their own real batches),
// then every client returns its generator feedback on `generator_batch`.
GradientFeedbackMsg client_round(Client& client,
                                 std::span<const Matrix> discriminator_batches,
                                 const Matrix& generator_batch,
                                 const gan::LossMode& loss, int round,
                                 uint64_t seed);

// Uniformly shuffles the ids and pairs neighbours; with an odd count the last
// shuffled id stays unpaired.
std::vector<std::pair<int, int>> random_pairing(std::vector<int> ids, Rng& rng);

// Runs the swap handshake for every pair over `network`. When `gated`, benign
// clients refuse peers outside their gate; free-riders always accept. An
// exchange happens only if both sides accept. `clients` is indexed by id.
std::vector<metrics::SwapRecord> swap_phase(std::span<const std::pair<int, int>> pairs,
                                            std::vector<Client>& clients, bool gated,
                                            Network& network, int round);

struct ProbeEvent {
  int round = 0;
  Matrix probe_samples;
  std::vector<defense::ResponseVector> responses;
  std::optional<Vector> detector_response;  // absent for dfg_adj
  defense::DetectionResult detection;
  std::optional<Matrix> distance_matrix;    // dfg_plus only
  std::map<int, std::set<int>> gates;       // benign client -> allowed peers
};

struct RoundLog {
  int round = 0;
  std::map<int, double> d_loss;          // benign clients only
  std::set<int> excluded;                // exclusion set in force after the round
  std::optional<defense::DetectionResult> detection;
  std::vector<metrics::SwapRecord> swaps;
  int generator_updates = 0;
  int skipped_generator_updates = 0;
  double defense_ms = 0.0;
  double train_ms = 0.0;
};

struct ExperimentResult {
  nn::MlpNetwork initial_generator;
  nn::MlpNetwork generator;
  std::vector<RoundLog> round_logs;
  std::vector<metrics::MetricsRecord> metrics;
  std::vector<ProbeEvent> probes;
  std::vector<TraceEntry> trace;
  std::set<int> free_riders;
  std::vector<long> discriminator_steps;  // per client id
};

class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Executes config.rounds rounds. Deterministic in the configuration.
ExperimentResult run_experiment(const ExperimentConfig& config);

// One JSON object per round.
void write_round_log_jsonl(std::span<const RoundLog> logs, const std::string& path,
                           bool with_timing);

// The real data every benign shard was cut from.
data::RingDataset make_experiment_dataset(const ExperimentConfig& config);

}  // namespace mdgan::sim

#endif  // MDGAN_EXPERIMENT_H_
