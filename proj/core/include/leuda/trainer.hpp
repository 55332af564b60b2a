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

// Two-stage experiment pipeline: translation training and synthetic-domain
// materialization, then teacher-student training for a chosen method,
// baselines and the ablation ladder.

#ifndef LEUDA_TRAINER_HPP_
#define LEUDA_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leuda/config.hpp"
#include "leuda/dataset.hpp"
#include "leuda/ensembling.hpp"
#include "leuda/evaluation.hpp"
#include "leuda/metrics.hpp"
#include "leuda/translation.hpp"

namespace leuda {

enum class Method : std::uint8_t {
  kNoAdaptation,
  kTranslationOnly,
  kIntraTeacher,
  kInterTeacher,
  kDualTeacher,
  kDualAdversarialTeacher,
  kSupervisedUpper,
};

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

/// Unsupervised terms trained by `method`.
ActiveLosses active_losses(Method method);
/// Whether the method consumes stage-1 translators and synthetic domains.
bool needs_translation(Method method);
/// Whether target test slices are translated to source style before
/// segmentation.
EvalInput evaluation_input(Method method);

/// Subjects of one run after applying the direction, and their split.
struct ExperimentData {
  std::vector<Subject> subjects;
  DatasetSplit split;
};

/// Generates (or loads) the phantom pool, applies the direction and splits
/// both domains with `seed`.
ExperimentData prepare_data(const ExperimentConfig& config, std::uint64_t seed);

/// Copy of `config` with every component seed derived from `seed`.
ExperimentConfig seeded_config(const ExperimentConfig& config, std::uint64_t seed);

struct Stage1Result {
  TranslatorPair translators;
  std::vector<DcamEpochLog> log;
  SyntheticDomains domains;
  std::string config_hash;
  std::filesystem::path dir;
};

/// Trains the translators and persists them, the training log, the split
/// and the synthetic image kinds (dataset-directory format) under `dir`.
Stage1Result run_stage1(const ExperimentConfig& config, const ExperimentData& data,
                        std::uint64_t seed, const std::filesystem::path& dir);

/// Restores a stage-1 result written by run_stage1.
Stage1Result load_stage1(const ExperimentConfig& config, const ExperimentData& data,
                         std::uint64_t seed, const std::filesystem::path& dir);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  LossWeights weights;
  /// Per-iteration breakdowns averaged over the epoch.
  LossBreakdown mean;
  std::vector<double> d_intra;
  std::vector<double> d_inter;
  /// Combined fingerprint of the epoch's batches.
  std::uint64_t batch_fingerprint = 0;
  int iterations = 0;
};

nlohmann::json to_json(const EpochRecord& record);
/// Schedule fields only (epoch, lr, weights, batch fingerprint).
nlohmann::json schedule_json(const EpochRecord& record);

struct RunRecord {
  Method method = Method::kNoAdaptation;
  std::uint64_t seed = 0;
  std::string direction;
  std::string config_hash;
  nlohmann::json overrides;
  std::vector<EpochRecord> epochs;
  std::vector<SubjectResult> subjects;
  AggregateResult result;
  std::optional<AuditReport> audit;
  double wall_seconds = 0.0;
  std::vector<std::string> tags;
  std::filesystem::path dir;
};

nlohmann::json to_json(const RunRecord& record);

/// Stage-2 training of `method` followed by evaluation on the target test
/// subjects. Writes schedule.jsonl, losses.csv, record.json and checkpoints
/// under `dir`. `stage1` is required when needs_translation(method).
RunRecord run_stage2(const ExperimentConfig& config, const ExperimentData& data, Method method,
                     Stage1Result* stage1, std::uint64_t seed,
                     const std::filesystem::path& dir);

/// Student trained only on labeled target subjects (the first
/// floor(label_ratio * n) training targets, at least one), evaluated on raw
/// target test subjects and tagged `upper_bound`.
RunRecord run_baseline_supervised(const ExperimentConfig& config, const ExperimentData& data,
                                  std::uint64_t seed, const std::filesystem::path& dir);

/// Hash recorded in RunRecord::config_hash and in the run's checkpoints.
std::string run_config_hash(const ExperimentConfig& config, Method method, std::uint64_t seed);

/// Restores the student from a stage-2 checkpoint and evaluates it on the
/// target test subjects. Throws InvalidInput when the checkpoint was written
/// under a different configuration.
RunRecord evaluate_checkpoint(const ExperimentConfig& config, const ExperimentData& data,
                              Method method, Stage1Result* stage1, std::uint64_t seed,
                              const std::filesystem::path& checkpoint);

struct AblationReport {
  std::vector<RunRecord> runs;
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;
};

/// Runs stage 1 once per seed, then every method of the ladder under that
/// seed's split, and writes the comparison report under `dir`/report.
AblationReport run_ablation_suite(const ExperimentConfig& config, std::span<const Method> methods,
                                  const std::filesystem::path& dir);

/// Methods listed in config.ablation_methods.
std::vector<Method> ablation_ladder(const ExperimentConfig& config);

/// Seed-level run directory and stage-1 directory names.
std::filesystem::path seed_dir(const std::filesystem::path& root, std::uint64_t seed);

}  // namespace leuda

#endif  // LEUDA_TRAINER_HPP_
