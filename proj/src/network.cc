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

#include "mdgan/network.h"

#include <stdexcept>

namespace mdgan::sim {
namespace {

struct Hasher {
  uint64_t h = 0xcbf29ce484222325ULL;

  void bytes(const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  }
  void real_block(const double* data, Eigen::Index n) {
    bytes(data, static_cast<size_t>(n) * sizeof(double));
  }
  void integer(int64_t v) { bytes(&v, sizeof(v)); }
};

}  // namespace

MessageKind kind_of(const Message& message) {
  return static_cast<MessageKind>(message.index());
}

std::string to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::kFakeBatch: return "FakeBatch";
    case MessageKind::kGradientFeedback: return "GradientFeedback";
    case MessageKind::kProbeRequest: return "ProbeRequest";
    case MessageKind::kProbeResponse: return "ProbeResponse";
    case MessageKind::kDistanceRow: return "DistanceRow";
    case MessageKind::kSwapProposal: return "SwapProposal";
    case MessageKind::kSwapDecision: return "SwapDecision";
    case MessageKind::kModelWeights: return "ModelWeights";
  }
  return "Unknown";
}

uint64_t payload_hash(const Message& message) {
  Hasher hs;
  hs.integer(static_cast<int64_t>(message.index()));
  std::visit(
      [&hs](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, FakeBatchMsg>) {
          hs.integer(static_cast<int64_t>(m.purpose));
          hs.real_block(m.samples.data(), m.samples.size());
        } else if constexpr (std::is_same_v<T, GradientFeedbackMsg>) {
          hs.real_block(m.input_grads.data(), m.input_grads.size());
        } else if constexpr (std::is_same_v<T, ProbeRequestMsg>) {
          hs.real_block(m.samples.data(), m.samples.size());
        } else if constexpr (std::is_same_v<T, ProbeResponseMsg>) {
          hs.real_block(m.scores.data(), m.scores.size());
        } else if constexpr (std::is_same_v<T, DistanceRowMsg>) {
          hs.integer(m.self_index);
          hs.real_block(m.row.data(), m.row.size());
          for (int c : m.index_to_client) hs.integer(c);
        } else if constexpr (std::is_same_v<T, SwapProposalMsg>) {
          hs.integer(m.peer);
        } else if constexpr (std::is_same_v<T, SwapDecisionMsg>) {
          hs.integer(m.peer);
          hs.integer(m.accept);
        } else if constexpr (std::is_same_v<T, ModelWeightsMsg>) {
          hs.integer(static_cast<int64_t>(m.weights.weight_hash()));
        }
      },
      message);
  return hs.h;
}

void Network::send(Envelope envelope) {
  if (envelope.from == envelope.to)
    throw std::invalid_argument("endpoint " + std::to_string(envelope.from) +
                                " sent a message to itself");
  trace_.push_back({envelope.round, envelope.batch, envelope.from, envelope.to,
                    kind_of(envelope.payload), payload_hash(envelope.payload)});
  channels_[{envelope.from, envelope.to}].push_back(std::move(envelope));
}

std::optional<Envelope> Network::receive(int from, int to) {
  auto it = channels_.find({from, to});
  if (it == channels_.end() || it->second.empty()) return std::nullopt;
  Envelope e = std::move(it->second.front());
  it->second.pop_front();
  return e;
}

std::optional<Envelope> Network::receive_any(int to) {
  for (auto& [key, queue] : channels_) {
    if (key.second != to || queue.empty()) continue;
    Envelope e = std::move(queue.front());
    queue.pop_front();
    return e;
  }
  return std::nullopt;
}

size_t Network::pending() const {
  size_t n = 0;
  for (const auto& [key, queue] : channels_) n += queue.size();
  return n;
}

}  // namespace mdgan::sim
