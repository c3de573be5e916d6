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

#ifndef MDGAN_ROLES_H_
#define MDGAN_ROLES_H_

#include <string>

namespace mdgan {

enum class ClientKind { kBenign, kFreeRider };

inline std::string to_string(ClientKind kind) {
  return kind == ClientKind::kBenign ? "benign" : "free_rider";
}

}  // namespace mdgan

#endif  // MDGAN_ROLES_H_
