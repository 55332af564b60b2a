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

// Subject-level splitting under source label scarcity and per-step batch
// assembly.

#ifndef LEUDA_DATASET_HPP_
#define LEUDA_DATASET_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leuda/types.hpp"

namespace leuda {

/// Partitions source subjects into labeled/unlabeled/test and target subjects
/// into train/test.
///
/// The training count per domain is floor(train_fraction * N) (at least one)
/// and n_l = floor(label_ratio * n_train_source), clamped to one with a
/// warning. Deterministic for a fixed seed.
DatasetSplit split_dataset(std::span<const Subject> pool, double train_fraction,
                           double label_ratio, std::uint64_t seed);

nlohmann::json split_to_json(const DatasetSplit& split);
DatasetSplit split_from_json(const nlohmann::json& manifest);

/// Sample pools the stage-2 batches draw from.
struct TrainingPools {
  std::vector<LabeledImage> labeled;
  std::vector<PairedSample> pairs;
};

/// Gathers labeled slices of D_s^l (plus their cycle-source copies when
/// `config.labeled_cycle_source` is set and synthetic domains are supplied)
/// and the pairs whose kind is enabled in `config.pair_kinds`.
TrainingPools build_training_pools(const DatasetSplit& split,
                                   std::span<const Subject> subjects,
                                   const SyntheticDomains* synthetic,
                                   const TrainingConfig& config);

/// Same pool restricted to labeled target subjects; used by the supervised
/// upper bound.
std::vector<LabeledImage> labeled_slices(std::span<const Subject> subjects,
                                         std::span<const std::string> ids);

struct Batch {
  std::vector<LabeledImage> labeled;
  std::vector<PairedSample> pairs;
  bool labeled_with_replacement = false;
  bool pairs_with_replacement = false;
};

/// Draws `config.batch_labeled` labeled items and `config.batch_unlabeled`
/// pairs. Pairs are drawn by first picking a pair kind uniformly among the
/// kinds present in the pool, then a pair of that kind. Requests exceeding a
/// pool fall back to sampling with replacement.
Batch assemble_batch(const TrainingPools& pools, const TrainingConfig& config,
                     std::uint64_t step_seed);

/// Stable fingerprint of a batch's slice ids and kinds; used in run logs.
std::uint64_t batch_fingerprint(const Batch& batch);

/// Looks up subjects by id; throws InvalidInput on unknown ids.
std::map<std::string, const Subject*> index_subjects(std::span<const Subject> subjects);

}  // namespace leuda

#endif  // LEUDA_DATASET_HPP_
