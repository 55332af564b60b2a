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

// Experiment configuration: one flat key-value document covering data,
// architecture, both training stages and the run harness. Values can be
// overridden per key through LEUDA_<KEY> environment variables.

#ifndef LEUDA_CONFIG_HPP_
#define LEUDA_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leuda/networks.hpp"
#include "leuda/synthdata.hpp"
#include "leuda/translation.hpp"
#include "leuda/types.hpp"

namespace leuda {

enum class Direction : std::uint8_t { kAtoB, kBtoA };
std::string_view to_string(Direction direction);
Direction parse_direction(std::string_view text);

struct ExperimentConfig {
  PhantomSpec phantom;
  /// When set, subjects are read from this dataset directory instead of
  /// being generated.
  std::string dataset_dir;
  Direction direction = Direction::kAtoB;
  double train_fraction = 0.8;
  double label_ratio = 0.25;
  std::vector<std::uint64_t> seeds{0};
  std::string method = "dual_adversarial_teacher";
  std::vector<std::string> ablation_methods{"no_adaptation", "intra_teacher", "inter_teacher",
                                            "dual_teacher", "dual_adversarial_teacher"};
  SegmenterConfig segmenter;
  DiscriminatorConfig discriminator;
  TranslationConfig translation;
  TrainingConfig training;
  int threads = 1;
  /// Record routing, isolation and additivity checks during stage 2.
  bool audit = false;
  /// Save a stage-2 checkpoint every this many epochs; zero keeps only the
  /// final one.
  int checkpoint_every = 0;
  std::string log_level = "info";

  void validate() const;
};

/// Flat JSON object with one entry per key.
nlohmann::json to_flat_json(const ExperimentConfig& config);
/// Applies the keys present in `flat` on top of `base`; unknown keys throw
/// InvalidInput.
ExperimentConfig from_flat_json(const nlohmann::json& flat,
                                const ExperimentConfig& base = ExperimentConfig{});

ExperimentConfig load_config(const std::filesystem::path& path);

/// Looks up LEUDA_<UPPERCASE_KEY> for every key and applies the values found.
/// Returns the keys that were overridden.
using EnvLookup = std::function<const char*(const char*)>;
std::vector<std::string> apply_env_overrides(ExperimentConfig& config,
                                             const EnvLookup& lookup = {});

/// Keys whose value differs from the built-in defaults, with both values.
nlohmann::json config_overrides(const ExperimentConfig& config);

/// 16-hex-digit FNV-1a hash of the canonical flat JSON.
std::string config_hash(const nlohmann::json& flat);
std::string config_hash(const ExperimentConfig& config);

}  // namespace leuda

#endif  // LEUDA_CONFIG_HPP_
