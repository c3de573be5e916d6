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

#ifndef MDGAN_CONFIG_H_
#define MDGAN_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mdgan/gan.h"
#include "mdgan/nn.h"

namespace mdgan {

enum class Protocol { kSimple, kSwap };
enum class Defense { kNone, kDfg, kDfgPlus, kDfgAdj };

std::string to_string(Protocol p);
std::string to_string(Defense d);
Protocol parse_protocol(const std::string& text);
Defense parse_defense(const std::string& text);

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Every knob of one experiment. Defaults: 5 benign clients, 100 rounds,
// probing every 10 rounds with 500 samples,
// one generator step per 5 discriminator steps, 10 mini-batches per round.
struct ExperimentConfig {
  // Federation and protocol.
  int n_benign = 5;
  int n_freeriders = 0;
  Protocol protocol = Protocol::kSimple;
  Defense defense = Defense::kNone;
  int rounds = 100;
  int swap_period = 5;
  int probe_period = 10;
  int probe_size = 500;
  int batch_size = 160;
  int d_steps_per_g_step = 5;
  bool freerider_reinit_every_round = false;

  // Losses and aggregation.
  gan::LossMode loss;
  gan::Aggregation aggregation = gan::Aggregation::kMean;

  uint64_t seed = 1;

  // Data.
  int modes = 8;
  double ring_radius = 2.0;
  double mode_noise_std = 0.05;
  int shard_size = 1600;

  // Models.
  int latent_dim = 4;
  std::vector<int> generator_hidden = {32, 32};
  std::vector<int> discriminator_hidden = {32, 32};
  // Fixed factor applied to discriminator inputs (free-rider and detector
  // models included).
  double discriminator_input_scale = 0.1;

  // Optimizers.
  nn::OptimizerKind optimizer = nn::OptimizerKind::kAdam;
  double d_learning_rate = 2e-3;
  double g_learning_rate = 2e-3;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;

  // Evaluation and output.
  int metrics_period = 5;
  int eval_samples = 10000;
  int sample_count = 10000;
  bool record_timing = false;

  int total_clients() const { return n_benign + n_freeriders; }
  int batches_per_round() const { return shard_size / batch_size; }
  nn::NetworkShape generator_shape() const;
  nn::NetworkShape discriminator_shape() const;

  // Throws ConfigError naming the offending field.
  void validate() const;

  // Canonical key=value form, one pair per line in a fixed key order.
  std::string to_key_values() const;
};

// Applies one key=value assignment. Throws ConfigError on unknown keys or
// malformed values.
void set_config_value(ExperimentConfig& config, const std::string& key,
                      const std::string& value);

// Reads a key=value document ('#' starts a comment, blank lines ignored).
std::map<std::string, std::string> read_key_values(const std::string& path);

// Defaults, then file values, then overrides (later wins). Validates.
ExperimentConfig parse_config(const std::string& path,
                              const std::map<std::string, std::string>& overrides);
ExperimentConfig parse_config(const std::map<std::string, std::string>& file_values,
                              const std::map<std::string, std::string>& overrides);

// Help text for every key with its default.
std::string config_reference();

}  // namespace mdgan

#endif  // MDGAN_CONFIG_H_
