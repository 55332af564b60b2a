// Copyright 2026 The leuda Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Full stage-2 checkpoints: student, both teachers with their update counts,
// every discriminator and both optimizer states, tagged with a config hash.

#ifndef LEUDA_CHECKPOINT_HPP_
#define LEUDA_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "leuda/ensembling.hpp"

namespace leuda {

struct CheckpointState {
  int epoch = 0;
  std::int64_t iteration = 0;
  std::string config_hash;
};

void save_checkpoint(const std::filesystem::path& path, ModelBundle& model,
                     StudentOptimizers* optimizers, const CheckpointState& state);

/// Restores into an already built bundle of the same layout. Throws
/// InvalidInput when `expected_hash` is non-empty and differs from the stored
/// hash.
CheckpointState load_checkpoint(const std::filesystem::path& path, ModelBundle& model,
                                StudentOptimizers* optimizers,
                                const std::string& expected_hash = "");

}  // namespace leuda

#endif  // LEUDA_CHECKPOINT_HPP_
