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

#include "mdgan/log.h"

#include <atomic>
#include <iostream>

namespace mdgan::log {
namespace {

std::atomic<Level> g_level{Level::kWarning};
std::atomic<long> g_warnings{0};

void emit(Level lvl, const char* tag, std::string_view message) {
  if (lvl < g_level.load()) return;
  std::cerr << '[' << tag << "] " << message << '\n';
}

}  // namespace

void set_level(Level lvl) { g_level.store(lvl); }
Level level() { return g_level.load(); }

void debug(std::string_view message) { emit(Level::kDebug, "debug", message); }
void info(std::string_view message) { emit(Level::kInfo, "info", message); }
void warning(std::string_view message) {
  ++g_warnings;
  emit(Level::kWarning, "warning", message);
}
void error(std::string_view message) { emit(Level::kError, "error", message); }

long warning_count() { return g_warnings.load(); }

}  // namespace mdgan::log
