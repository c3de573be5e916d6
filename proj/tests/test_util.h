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

#ifndef MDGAN_TESTS_TEST_UTIL_H_
#define MDGAN_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mdgan/config.h"

namespace mdgan::testing {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh scratch directory under the system temp dir.
inline std::string scratch_dir(const std::string& name) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("mdgan_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

// Scaled-down configuration for end-to-end tests that only check plumbing.
inline ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.n_benign = 3;
  c.rounds = 4;
  c.shard_size = 160;
  c.batch_size = 32;
  c.probe_period = 2;
  c.probe_size = 50;
  c.swap_period = 2;
  c.metrics_period = 2;
  c.eval_samples = 200;
  c.sample_count = 100;
  c.generator_hidden = {8};
  c.discriminator_hidden = {8};
  return c;
}

}  // namespace mdgan::testing

#endif  // MDGAN_TESTS_TEST_UTIL_H_
