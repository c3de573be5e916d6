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

#ifndef MDGAN_RANDOM_H_
#define MDGAN_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mdgan {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from the experiment seed and a tuple of
// tags (stream kind, client id, round, batch index, ...). Every random draw in
// the simulator goes through a generator seeded this way, so any draw can be
// replayed from its coordinates alone.
inline uint64_t derive_seed(uint64_t seed, std::initializer_list<uint64_t> tags) {
  uint64_t h = mix64(seed);
  for (uint64_t t : tags) h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(uint64_t seed, std::initializer_list<uint64_t> tags) {
  return Rng(derive_seed(seed, tags));
}

// Stream kinds for derive_seed.
namespace stream {
inline constexpr uint64_t kDataset = 1;
inline constexpr uint64_t kGeneratorInit = 2;
inline constexpr uint64_t kDiscriminatorInit = 3;
inline constexpr uint64_t kFreeRiderInit = 4;
inline constexpr uint64_t kShardOrder = 5;
inline constexpr uint64_t kLatentTrain = 6;
inline constexpr uint64_t kLatentGenerator = 7;
inline constexpr uint64_t kProbe = 8;
inline constexpr uint64_t kDetector = 9;
inline constexpr uint64_t kSwapPairing = 10;
inline constexpr uint64_t kEvaluation = 11;
inline constexpr uint64_t kGradientPenalty = 12;
inline constexpr uint64_t kSamples = 13;
}  // namespace stream

}  // namespace mdgan

#endif  // MDGAN_RANDOM_H_
