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

#include "mdgan/config.h"

#include <cmath>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "mdgan/metrics.h"

namespace mdgan {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const std::string t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(key, "cannot parse '" + text + "' as a number");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + text + "'");
}

std::vector<int> parse_widths(const std::string& key, const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<int>(key, item));
  if (out.empty()) throw ConfigError(key, "expected a comma-separated list of widths");
  return out;
}

std::string join_widths(const std::vector<int>& widths) {
  std::string out;
  for (size_t i = 0; i < widths.size(); ++i)
    out += (i ? "," : "") + std::to_string(widths[i]);
  return out;
}

std::string loss_name(const gan::LossMode& m) { return gan::to_string(m); }

struct Field {
  const char* key;
  const char* help;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define MDGAN_INT_FIELD(name, help)                                              \
  Field {                                                                        \
    #name, help,                                                                 \
        [](ExperimentConfig& c, const std::string& v) {                          \
          c.name = parse_number<int>(#name, v);                                  \
        },                                                                       \
        [](const ExperimentConfig& c) { return std::to_string(c.name); }        \
  }
#define MDGAN_REAL_FIELD(name, help)                                             \
  Field {                                                                        \
    #name, help,                                                                 \
        [](ExperimentConfig& c, const std::string& v) {                          \
          c.name = parse_number<double>(#name, v);                               \
        },                                                                       \
        [](const ExperimentConfig& c) { return metrics::format_real(c.name); }  \
  }
#define MDGAN_BOOL_FIELD(name, help)                                             \
  Field {                                                                        \
    #name, help,                                                                 \
        [](ExperimentConfig& c, const std::string& v) {                          \
          c.name = parse_bool(#name, v);                                         \
        },                                                                       \
        [](const ExperimentConfig& c) { return std::string(c.name ? "true" : "false"); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      MDGAN_INT_FIELD(n_benign, "benign data-holding clients"),
      MDGAN_INT_FIELD(n_freeriders, "free-riding clients"),
      Field{"protocol", "simple | swap",
            [](ExperimentConfig& c, const std::string& v) { c.protocol = parse_protocol(trim(v)); },
            [](const ExperimentConfig& c) { return to_string(c.protocol); }},
      Field{"defense", "none | dfg | dfg_plus | dfg_adj (dfg_plus needs protocol=swap)",
            [](ExperimentConfig& c, const std::string& v) { c.defense = parse_defense(trim(v)); },
            [](const ExperimentConfig& c) { return to_string(c.defense); }},
      MDGAN_INT_FIELD(rounds, "training rounds"),
      MDGAN_INT_FIELD(swap_period, "rounds between swap phases under protocol=swap"),
      MDGAN_INT_FIELD(probe_period, "rounds between probe rounds"),
      MDGAN_INT_FIELD(probe_size, "samples in the shared probe set"),
      MDGAN_INT_FIELD(batch_size, "mini-batch size; shard_size/batch_size batches per round"),
      MDGAN_INT_FIELD(d_steps_per_g_step,
                      "discriminator steps per generator step"),
      MDGAN_BOOL_FIELD(freerider_reinit_every_round,
                       "free-riders draw a fresh random discriminator every round"),
      Field{"loss", "nsgan | wgan_clip | wgan_gp",
            [](ExperimentConfig& c, const std::string& v) {
              const std::string t = trim(v);
              if (t == "nsgan") c.loss.kind = gan::LossMode::Kind::kNsgan;
              else if (t == "wgan_clip") c.loss.kind = gan::LossMode::Kind::kWganClip;
              else if (t == "wgan_gp") c.loss.kind = gan::LossMode::Kind::kWganGp;
              else throw ConfigError("loss", "unknown loss '" + v + "'");
            },
            [](const ExperimentConfig& c) { return loss_name(c.loss); }},
      Field{"clip_c", "weight clamp for wgan_clip",
            [](ExperimentConfig& c, const std::string& v) { c.loss.clip = parse_number<double>("clip_c", v); },
            [](const ExperimentConfig& c) { return metrics::format_real(c.loss.clip); }},
      Field{"lambda_gp", "gradient-penalty weight for wgan_gp",
            [](ExperimentConfig& c, const std::string& v) {
              c.loss.lambda_gp = parse_number<double>("lambda_gp", v);
            },
            [](const ExperimentConfig& c) { return metrics::format_real(c.loss.lambda_gp); }},
      Field{"aggregation", "sum | mean over included clients' generator gradients",
            [](ExperimentConfig& c, const std::string& v) {
              const std::string t = trim(v);
              if (t == "sum") c.aggregation = gan::Aggregation::kSum;
              else if (t == "mean") c.aggregation = gan::Aggregation::kMean;
              else throw ConfigError("aggregation", "expected sum or mean, got '" + v + "'");
            },
            [](const ExperimentConfig& c) {
              return std::string(c.aggregation == gan::Aggregation::kSum ? "sum" : "mean");
            }},
      Field{"seed", "experiment seed; every random draw derives from it",
            [](ExperimentConfig& c, const std::string& v) { c.seed = parse_number<uint64_t>("seed", v); },
            [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      MDGAN_INT_FIELD(modes, "Gaussian modes on the ring"),
      MDGAN_REAL_FIELD(ring_radius, "ring radius"),
      MDGAN_REAL_FIELD(mode_noise_std, "per-mode standard deviation"),
      MDGAN_INT_FIELD(shard_size, "points per benign client"),
      MDGAN_INT_FIELD(latent_dim, "generator latent dimension"),
      Field{"generator_hidden", "comma-separated hidden widths of G",
            [](ExperimentConfig& c, const std::string& v) {
              c.generator_hidden = parse_widths("generator_hidden", v);
            },
            [](const ExperimentConfig& c) { return join_widths(c.generator_hidden); }},
      Field{"discriminator_hidden", "comma-separated hidden widths of every D",
            [](ExperimentConfig& c, const std::string& v) {
              c.discriminator_hidden = parse_widths("discriminator_hidden", v);
            },
            [](const ExperimentConfig& c) { return join_widths(c.discriminator_hidden); }},
      MDGAN_REAL_FIELD(discriminator_input_scale,
                       "fixed factor applied to every D input before the first layer"),
      Field{"optimizer", "sgd | adam",
            [](ExperimentConfig& c, const std::string& v) {
              const std::string t = trim(v);
              if (t == "sgd") c.optimizer = nn::OptimizerKind::kSgd;
              else if (t == "adam") c.optimizer = nn::OptimizerKind::kAdam;
              else throw ConfigError("optimizer", "expected sgd or adam, got '" + v + "'");
            },
            [](const ExperimentConfig& c) {
              return std::string(c.optimizer == nn::OptimizerKind::kSgd ? "sgd" : "adam");
            }},
      MDGAN_REAL_FIELD(d_learning_rate, "discriminator learning rate"),
      MDGAN_REAL_FIELD(g_learning_rate, "generator learning rate"),
      MDGAN_REAL_FIELD(adam_beta1, "Adam first-moment decay"),
      MDGAN_REAL_FIELD(adam_beta2, "Adam second-moment decay"),
      MDGAN_INT_FIELD(metrics_period, "rounds between Frechet-distance evaluations"),
      MDGAN_INT_FIELD(eval_samples, "generated samples per evaluation"),
      MDGAN_INT_FIELD(sample_count, "generated points written to samples.csv"),
      MDGAN_BOOL_FIELD(record_timing,
                       "write wall-clock columns (makes outputs non-reproducible)"),
  };
  return kFields;
}

#undef MDGAN_INT_FIELD
#undef MDGAN_REAL_FIELD
#undef MDGAN_BOOL_FIELD

}  // namespace

ConfigError::ConfigError(const std::string& field, const std::string& message)
    : std::invalid_argument("config field '" + field + "': " + message), field_(field) {}

std::string to_string(Protocol p) { return p == Protocol::kSimple ? "simple" : "swap"; }

std::string to_string(Defense d) {
  switch (d) {
    case Defense::kNone: return "none";
    case Defense::kDfg: return "dfg";
    case Defense::kDfgPlus: return "dfg_plus";
    case Defense::kDfgAdj: return "dfg_adj";
  }
  return "unknown";
}

Protocol parse_protocol(const std::string& text) {
  if (text == "simple") return Protocol::kSimple;
  if (text == "swap") return Protocol::kSwap;
  throw ConfigError("protocol", "expected simple or swap, got '" + text + "'");
}

Defense parse_defense(const std::string& text) {
  if (text == "none") return Defense::kNone;
  if (text == "dfg") return Defense::kDfg;
  if (text == "dfg_plus" || text == "dfg+") return Defense::kDfgPlus;
  if (text == "dfg_adj") return Defense::kDfgAdj;
  throw ConfigError("defense", "expected none, dfg, dfg_plus or dfg_adj, got '" + text + "'");
}

nn::NetworkShape ExperimentConfig::generator_shape() const {
  nn::NetworkShape shape;
  shape.dims.push_back(latent_dim);
  shape.dims.insert(shape.dims.end(), generator_hidden.begin(), generator_hidden.end());
  shape.dims.push_back(2);
  shape.hidden = nn::HiddenActivation::kRelu;
  shape.output = nn::OutputActivation::kIdentity;
  return shape;
}

nn::NetworkShape ExperimentConfig::discriminator_shape() const {
  nn::NetworkShape shape;
  shape.dims.push_back(2);
  shape.dims.insert(shape.dims.end(), discriminator_hidden.begin(),
                    discriminator_hidden.end());
  shape.dims.push_back(1);
  shape.hidden = nn::HiddenActivation::kLeakyRelu;
  shape.leaky_slope = 0.2;
  shape.input_scale = discriminator_input_scale;
  shape.output = loss.is_wgan() ? nn::OutputActivation::kIdentity
                                : nn::OutputActivation::kSigmoid;
  return shape;
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const char* field, const std::string& message) {
    if (!ok) throw ConfigError(field, message);
  };
  require(n_benign >= 1, "n_benign", "at least one benign client is required");
  require(n_freeriders >= 0, "n_freeriders", "must be >= 0");
  require(rounds >= 0, "rounds", "must be >= 0");
  require(swap_period >= 1, "swap_period", "must be >= 1");
  require(probe_period >= 1, "probe_period", "must be >= 1");
  require(defense == Defense::kNone || rounds == 0 || probe_period <= rounds,
          "probe_period", "must not exceed rounds when a defense is enabled");
  require(!(defense == Defense::kDfgPlus && protocol != Protocol::kSwap), "defense",
          "dfg_plus requires protocol=swap (its swap gate only acts on swaps)");
  require(probe_size >= 1, "probe_size", "must be >= 1");
  require(batch_size >= 1, "batch_size", "must be >= 1");
  require(shard_size >= batch_size, "batch_size", "must not exceed shard_size");
  require(d_steps_per_g_step >= 1, "d_steps_per_g_step", "must be >= 1");
  require(batches_per_round() >= d_steps_per_g_step, "d_steps_per_g_step",
          "a round must contain at least one generator step "
          "(shard_size / batch_size >= d_steps_per_g_step)");
  require(modes >= 1, "modes", "must be >= 1");
  require(ring_radius >= 0.0, "ring_radius", "must be >= 0");
  require(mode_noise_std > 0.0, "mode_noise_std", "must be > 0");
  require(shard_size >= 1, "shard_size", "must be >= 1");
  require((static_cast<long>(shard_size) * n_benign) % modes == 0, "shard_size",
          "shard_size * n_benign must be divisible by modes");
  require(latent_dim >= 1, "latent_dim", "must be >= 1");
  for (int w : generator_hidden) require(w >= 1, "generator_hidden", "widths must be >= 1");
  for (int w : discriminator_hidden)
    require(w >= 1, "discriminator_hidden", "widths must be >= 1");
  require(discriminator_input_scale > 0.0 && std::isfinite(discriminator_input_scale),
          "discriminator_input_scale", "must be positive and finite");
  require(d_learning_rate > 0.0, "d_learning_rate", "must be > 0");
  require(g_learning_rate > 0.0, "g_learning_rate", "must be > 0");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1", "must lie in [0, 1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2", "must lie in [0, 1)");
  require(metrics_period >= 1, "metrics_period", "must be >= 1");
  require(eval_samples >= 3, "eval_samples", "must be >= 3 for a 2-D Gaussian fit");
  require(sample_count >= 1, "sample_count", "must be >= 1");
  require(loss.kind != gan::LossMode::Kind::kWganClip || loss.clip > 0.0, "clip_c",
          "must be > 0");
  require(loss.kind != gan::LossMode::Kind::kWganGp || loss.lambda_gp >= 0.0, "lambda_gp",
          "must be >= 0");
}

std::string ExperimentConfig::to_key_values() const {
  std::string out;
  for (const Field& f : fields()) out += std::string(f.key) + "=" + f.get(*this) + "\n";
  return out;
}

void set_config_value(ExperimentConfig& config, const std::string& key,
                      const std::string& value) {
  const std::string k = trim(key);
  for (const Field& f : fields())
    if (k == f.key) {
      f.set(config, value);
      return;
    }
  throw ConfigError(k, "unknown key");
}

std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::map<std::string, std::string> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key=value");
    values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return values;
}

ExperimentConfig parse_config(const std::map<std::string, std::string>& file_values,
                              const std::map<std::string, std::string>& overrides) {
  ExperimentConfig config;
  for (const auto& [k, v] : file_values) set_config_value(config, k, v);
  for (const auto& [k, v] : overrides) set_config_value(config, k, v);
  config.validate();
  return config;
}

ExperimentConfig parse_config(const std::string& path,
                              const std::map<std::string, std::string>& overrides) {
  return parse_config(path.empty() ? std::map<std::string, std::string>{}
                                   : read_key_values(path),
                      overrides);
}

std::string config_reference() {
  const ExperimentConfig defaults;
  std::ostringstream out;
  for (const Field& f : fields())
    out << "  " << f.key << " (default " << f.get(defaults) << "): " << f.help << "\n";
  return out.str();
}

}  // namespace mdgan
