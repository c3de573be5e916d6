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

// In-process message passing between the generator and the clients. Every
// channel (sender, receiver) is a FIFO, delivery is instant and lossless, and
// every send is appended to a trace that tests and determinism checks read.

#ifndef MDGAN_NETWORK_H_
#define MDGAN_NETWORK_H_

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mdgan/nn.h"

namespace mdgan::sim {

using nn::Matrix;
using nn::Vector;

inline constexpr int kGeneratorEndpoint = -1;

enum class BatchPurpose { kDiscriminatorTraining, kGeneratorTraining };

struct FakeBatchMsg {
  BatchPurpose purpose = BatchPurpose::kDiscriminatorTraining;
  Matrix samples;
};
struct GradientFeedbackMsg {
  Matrix input_grads;
};
struct ProbeRequestMsg {
  Matrix samples;
};
struct ProbeResponseMsg {
  Vector scores;
};
// Row `self_index` of the distance matrix; `index_to_client` maps columns to
// client ids (-1 marks the detector).
struct DistanceRowMsg {
  int self_index = 0;
  Vector row;
  std::vector<int> index_to_client;
};
struct SwapProposalMsg {
  int peer = 0;
};
struct SwapDecisionMsg {
  int peer = 0;
  bool accept = false;
};
struct ModelWeightsMsg {
  nn::MlpNetwork weights;
};

using Message = std::variant<FakeBatchMsg, GradientFeedbackMsg, ProbeRequestMsg,
                             ProbeResponseMsg, DistanceRowMsg, SwapProposalMsg,
                             SwapDecisionMsg, ModelWeightsMsg>;

enum class MessageKind {
  kFakeBatch,
  kGradientFeedback,
  kProbeRequest,
  kProbeResponse,
  kDistanceRow,
  kSwapProposal,
  kSwapDecision,
  kModelWeights,
};

MessageKind kind_of(const Message& message);
std::string to_string(MessageKind kind);

struct Envelope {
  int from = kGeneratorEndpoint;
  int to = kGeneratorEndpoint;
  int round = 0;
  int batch = -1;  // -1 outside mini-batch context (probe rows, swaps)
  Message payload;
};

struct TraceEntry {
  int round = 0;
  int batch = 0;
  int from = 0;
  int to = 0;
  MessageKind kind = MessageKind::kFakeBatch;
  uint64_t payload_hash = 0;

  bool operator==(const TraceEntry&) const = default;
};

class Network {
 public:
  void send(Envelope envelope);

  // Next message on channel (from -> to), if any.
  std::optional<Envelope> receive(int from, int to);

  // Next message for `to` across all senders, lowest sender id first.
  std::optional<Envelope> receive_any(int to);

  size_t pending() const;
  const std::vector<TraceEntry>& trace() const { return trace_; }
  void clear_trace() { trace_.clear(); }

 private:
  std::map<std::pair<int, int>, std::deque<Envelope>> channels_;
  std::vector<TraceEntry> trace_;
};

uint64_t payload_hash(const Message& message);

}  // namespace mdgan::sim

#endif  // MDGAN_NETWORK_H_
