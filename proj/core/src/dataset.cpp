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

#include "leuda/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace leuda {
namespace {

std::size_t training_count(std::size_t n, double train_fraction) {
  if (n == 0) return 0;
  auto count = static_cast<std::size_t>(std::floor(train_fraction * n + 1e-9));
  return std::clamp<std::size_t>(count, 1, n);
}

std::vector<std::string> shuffled_ids(std::span<const Subject> pool, Domain domain,
                                      std::mt19937_64& rng) {
  std::vector<std::string> ids;
  for (const auto& subject : pool) {
    if (subject.domain == domain) ids.push_back(subject.id);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw InvalidInput("split_dataset: duplicate subject id");
  }
  std::shuffle(ids.begin(), ids.end(), rng);
  return ids;
}

void hash_bytes(std::uint64_t& h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

DatasetSplit split_dataset(std::span<const Subject> pool, double train_fraction,
                           double label_ratio, std::uint64_t seed) {
  if (pool.empty()) throw InvalidInput("split_dataset: empty pool");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw InvalidInput("split_dataset: train_fraction must lie in (0, 1]");
  }
  if (!(label_ratio > 0.0 && label_ratio <= 1.0)) {
    throw InvalidInput("split_dataset: label_ratio must lie in (0, 1]");
  }

  DatasetSplit split;
  split.seed = seed;
  std::mt19937_64 rng(mix_seed(seed));

  auto source = shuffled_ids(pool, Domain::kSource, rng);
  auto target = shuffled_ids(pool, Domain::kTarget, rng);

  const std::size_t n_train = training_count(source.size(), train_fraction);
  std::size_t n_labeled = 0;
  if (n_train > 0) {
    n_labeled = static_cast<std::size_t>(std::floor(label_ratio * n_train + 1e-9));
    if (n_labeled == 0) {
      n_labeled = 1;
      split.warnings.push_back("label_ratio " + std::to_string(label_ratio) +
                               " yields zero labeled subjects; clamped to one");
    }
  }
  split.labeled_source.assign(source.begin(), source.begin() + n_labeled);
  split.unlabeled_source.assign(source.begin() + n_labeled, source.begin() + n_train);
  split.source_test.assign(source.begin() + n_train, source.end());

  const std::size_t m_train = training_count(target.size(), train_fraction);
  split.target.assign(target.begin(), target.begin() + m_train);
  split.target_test.assign(target.begin() + m_train, target.end());

  split.label_ratio = split.realized_label_ratio();
  return split;
}

nlohmann::json split_to_json(const DatasetSplit& split) {
  return nlohmann::json{
      {"seed", split.seed},
      {"label_ratio", split.label_ratio},
      {"labeled_source", split.labeled_source},
      {"unlabeled_source", split.unlabeled_source},
      {"source_test", split.source_test},
      {"target", split.target},
      {"target_test", split.target_test},
      {"warnings", split.warnings},
  };
}

DatasetSplit split_from_json(const nlohmann::json& manifest) {
  DatasetSplit split;
  split.seed = manifest.at("seed").get<std::uint64_t>();
  split.label_ratio = manifest.at("label_ratio").get<double>();
  split.labeled_source = manifest.at("labeled_source").get<std::vector<std::string>>();
  split.unlabeled_source = manifest.at("unlabeled_source").get<std::vector<std::string>>();
  split.source_test = manifest.at("source_test").get<std::vector<std::string>>();
  split.target = manifest.at("target").get<std::vector<std::string>>();
  split.target_test = manifest.at("target_test").get<std::vector<std::string>>();
  split.warnings = manifest.value("warnings", std::vector<std::string>{});
  return split;
}

std::map<std::string, const Subject*> index_subjects(std::span<const Subject> subjects) {
  std::map<std::string, const Subject*> index;
  for (const auto& subject : subjects) index[subject.id] = &subject;
  return index;
}

std::vector<LabeledImage> labeled_slices(std::span<const Subject> subjects,
                                         std::span<const std::string> ids) {
  const auto index = index_subjects(subjects);
  std::vector<LabeledImage> out;
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw InvalidInput("unknown subject id: " + id);
    const Subject& subject = *it->second;
    if (!subject.masks) throw InvalidInput("subject " + id + " has no masks");
    for (std::size_t i = 0; i < subject.slices.size(); ++i) {
      out.push_back({subject.slices[i], (*subject.masks)[i]});
    }
  }
  return out;
}

TrainingPools build_training_pools(const DatasetSplit& split,
                                   std::span<const Subject> subjects,
                                   const SyntheticDomains* synthetic,
                                   const TrainingConfig& config) {
  TrainingPools pools;
  pools.labeled = labeled_slices(subjects, split.labeled_source);
  if (synthetic == nullptr) return pools;

  if (config.labeled_cycle_source) {
    std::set<std::string> labeled_slice_ids;
    for (const auto& item : pools.labeled) labeled_slice_ids.insert(item.image.slice_id);
    for (const auto& item : synthetic->labeled_cycle_source) {
      if (labeled_slice_ids.contains(item.image.slice_id)) pools.labeled.push_back(item);
    }
  }
  const std::set<PairKind> enabled(config.pair_kinds.begin(), config.pair_kinds.end());
  for (const auto& pair : synthetic->pairs) {
    if (enabled.contains(pair.kind)) pools.pairs.push_back(pair);
  }
  return pools;
}

Batch assemble_batch(const TrainingPools& pools, const TrainingConfig& config,
                     std::uint64_t step_seed) {
  Batch batch;
  std::mt19937_64 rng(mix_seed(step_seed));

  const auto want_labeled = static_cast<std::size_t>(config.batch_labeled);
  if (want_labeled > 0) {
    if (pools.labeled.empty()) throw InvalidInput("assemble_batch: empty labeled pool");
    std::vector<std::size_t> order(pools.labeled.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < want_labeled; ++i) {
      if (i < order.size()) {
        batch.labeled.push_back(pools.labeled[order[i]]);
      } else {
        batch.labeled_with_replacement = true;
        std::uniform_int_distribution<std::size_t> pick(0, order.size() - 1);
        batch.labeled.push_back(pools.labeled[pick(rng)]);
      }
    }
  }

  const auto want_pairs = static_cast<std::size_t>(config.batch_unlabeled);
  if (want_pairs > 0) {
    std::map<PairKind, std::vector<std::size_t>> by_kind;
    for (std::size_t i = 0; i < pools.pairs.size(); ++i) {
      by_kind[pools.pairs[i].kind].push_back(i);
    }
    if (by_kind.empty()) throw InvalidInput("assemble_batch: empty pair pool");
    std::vector<PairKind> kinds;
    for (auto& [kind, members] : by_kind) {
      kinds.push_back(kind);
      std::shuffle(members.begin(), members.end(), rng);
    }
    std::map<PairKind, std::size_t> cursor;
    std::uniform_int_distribution<std::size_t> pick_kind(0, kinds.size() - 1);
    for (std::size_t i = 0; i < want_pairs; ++i) {
      const PairKind kind = kinds[pick_kind(rng)];
      auto& members = by_kind[kind];
      std::size_t& pos = cursor[kind];
      if (pos == members.size()) {
        batch.pairs_with_replacement = true;
        std::shuffle(members.begin(), members.end(), rng);
        pos = 0;
      }
      batch.pairs.push_back(pools.pairs[members[pos++]]);
    }
  }
  return batch;
}

std::uint64_t batch_fingerprint(const Batch& batch) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& item : batch.labeled) {
    hash_bytes(h, item.image.slice_id);
    hash_bytes(h, to_string(item.image.kind));
  }
  for (const auto& pair : batch.pairs) {
    hash_bytes(h, pair.source_style.slice_id);
    hash_bytes(h, to_string(pair.kind));
  }
  return h;
}

}  // namespace leuda
