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

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "leuda/dataset.hpp"

namespace leuda {
namespace {

Subject make_subject(const std::string& id, Domain domain, int slices = 2, bool masks = true) {
  Subject s;
  s.id = id;
  s.domain = domain;
  s.modality = domain == Domain::kSource ? "A" : "B";
  for (int i = 0; i < slices; ++i) {
    s.slices.push_back({Grid2D<float>(4, 4, static_cast<float>(i)),
                        domain == Domain::kSource ? ImageKind::kS : ImageKind::kT,
                        id + "/" + std::to_string(i)});
  }
  if (masks) s.masks = std::vector<SegMask>(slices, SegMask{Grid2D<std::uint8_t>(4, 4, 1)});
  return s;
}

std::vector<Subject> make_pool(int n_source, int n_target) {
  std::vector<Subject> pool;
  for (int i = 0; i < n_source; ++i) pool.push_back(make_subject("s" + std::to_string(i), Domain::kSource));
  for (int i = 0; i < n_target; ++i) pool.push_back(make_subject("t" + std::to_string(i), Domain::kTarget));
  return pool;
}

TEST(SplitDataset, DeskCountsAtQuarterLabels) {
  const auto pool = make_pool(20, 20);
  const auto split = split_dataset(pool, 0.8, 0.25, 3);
  EXPECT_EQ(split.n_labeled(), 4u);
  EXPECT_EQ(split.n_unlabeled(), 12u);
  EXPECT_EQ(split.source_test.size(), 4u);
  EXPECT_EQ(split.target.size(), 16u);
  EXPECT_EQ(split.target_test.size(), 4u);
  EXPECT_DOUBLE_EQ(split.realized_label_ratio(), 0.25);
  EXPECT_TRUE(split.warnings.empty());
}

TEST(SplitDataset, PartitionsAreDisjointAndCoverEachDomain) {
  const auto pool = make_pool(20, 20);
  const auto split = split_dataset(pool, 0.8, 0.25, 11);
  std::set<std::string> all;
  for (const auto* part : {&split.labeled_source, &split.unlabeled_source, &split.source_test,
                           &split.target, &split.target_test}) {
    for (const auto& id : *part) EXPECT_TRUE(all.insert(id).second) << id;
  }
  EXPECT_EQ(all.size(), 40u);
  for (const auto& id : split.labeled_source) EXPECT_EQ(id[0], 's');
  for (const auto& id : split.target) EXPECT_EQ(id[0], 't');
}

TEST(SplitDataset, FullLabelsLeaveNoUnlabeledSubjects) {
  const auto split = split_dataset(make_pool(20, 20), 0.8, 1.0, 0);
  EXPECT_EQ(split.n_labeled(), 16u);
  EXPECT_EQ(split.n_unlabeled(), 0u);
}

TEST(SplitDataset, TinyRatioClampsToOneWithWarning) {
  const auto split = split_dataset(make_pool(5, 5), 0.8, 0.1, 0);
  EXPECT_EQ(split.n_labeled(), 1u);
  EXPECT_EQ(split.warnings.size(), 1u);
}

TEST(SplitDataset, DeterministicPerSeedAndVariesAcrossSeeds) {
  const auto pool = make_pool(20, 20);
  const auto a = split_dataset(pool, 0.8, 0.25, 5);
  const auto b = split_dataset(pool, 0.8, 0.25, 5);
  EXPECT_EQ(a.labeled_source, b.labeled_source);
  EXPECT_EQ(a.target_test, b.target_test);
  bool differs = false;
  for (std::uint64_t s = 6; s < 10 && !differs; ++s) {
    differs = split_dataset(pool, 0.8, 0.25, s).labeled_source != a.labeled_source;
  }
  EXPECT_TRUE(differs);
}

TEST(SplitDataset, RejectsBadArguments) {
  const auto pool = make_pool(4, 4);
  EXPECT_THROW(split_dataset({}, 0.8, 0.25, 0), InvalidInput);
  EXPECT_THROW(split_dataset(pool, 0.0, 0.25, 0), InvalidInput);
  EXPECT_THROW(split_dataset(pool, 0.8, 0.0, 0), InvalidInput);
  EXPECT_THROW(split_dataset(pool, 0.8, 1.5, 0), InvalidInput);
  auto dup = pool;
  dup.push_back(pool.front());
  EXPECT_THROW(split_dataset(dup, 0.8, 0.25, 0), InvalidInput);
}

TEST(SplitDataset, JsonRoundTrip) {
  const auto split = split_dataset(make_pool(10, 10), 0.8, 0.25, 9);
  const auto back = split_from_json(split_to_json(split));
  EXPECT_EQ(back.labeled_source, split.labeled_source);
  EXPECT_EQ(back.unlabeled_source, split.unlabeled_source);
  EXPECT_EQ(back.source_test, split.source_test);
  EXPECT_EQ(back.target, split.target);
  EXPECT_EQ(back.target_test, split.target_test);
  EXPECT_EQ(back.seed, split.seed);
}

SyntheticDomains fake_synthetic(const std::vector<Subject>& pool, const DatasetSplit& split) {
  SyntheticDomains syn;
  const auto index = index_subjects(pool);
  auto image = [](const ImageTensor& src, ImageKind kind) {
    ImageTensor out = src;
    out.kind = kind;
    return out;
  };
  for (const auto* ids : {&split.labeled_source, &split.unlabeled_source}) {
    for (const auto& id : *ids) {
      const Subject& s = *index.at(id);
      for (std::size_t i = 0; i < s.slices.size(); ++i) {
        const auto s2t = image(s.slices[i], ImageKind::kS2T);
        const auto s2t2s = image(s.slices[i], ImageKind::kS2T2S);
        syn.pairs.push_back({s.slices[i], s2t, PairKind::kSourceAndS2T});
        syn.pairs.push_back({s2t2s, s2t, PairKind::kCycleSourceAndS2T});
        syn.labeled_cycle_source.push_back({s2t2s, (*s.masks)[i]});
      }
    }
  }
  for (const auto& id : split.target) {
    for (const auto& xt : index.at(id)->slices) {
      const auto t2s = image(xt, ImageKind::kT2S);
      syn.pairs.push_back({t2s, xt, PairKind::kT2SAndTarget});
      syn.pairs.push_back({t2s, image(xt, ImageKind::kT2S2T), PairKind::kT2SAndCycleTarget});
    }
  }
  return syn;
}

TEST(TrainingPools, LabeledPoolHoldsOnlyLabeledSubjectsAndCycleCopies) {
  const auto pool = make_pool(10, 10);
  const auto split = split_dataset(pool, 0.8, 0.25, 2);
  const auto syn = fake_synthetic(pool, split);
  TrainingConfig cfg;
  const auto pools = build_training_pools(split, pool, &syn, cfg);
  const std::set<std::string> labeled(split.labeled_source.begin(), split.labeled_source.end());
  std::size_t cycle = 0;
  for (const auto& item : pools.labeled) {
    EXPECT_TRUE(labeled.contains(item.image.slice_id.substr(0, item.image.slice_id.find('/'))));
    cycle += item.image.kind == ImageKind::kS2T2S;
  }
  EXPECT_EQ(cycle, split.n_labeled() * 2);
  EXPECT_EQ(pools.labeled.size(), split.n_labeled() * 4);
  EXPECT_EQ(pools.pairs.size(), syn.pairs.size());

  cfg.labeled_cycle_source = false;
  cfg.pair_kinds = {PairKind::kT2SAndTarget};
  const auto narrow = build_training_pools(split, pool, &syn, cfg);
  EXPECT_EQ(narrow.labeled.size(), split.n_labeled() * 2);
  for (const auto& p : narrow.pairs) EXPECT_EQ(p.kind, PairKind::kT2SAndTarget);

  const auto plain = build_training_pools(split, pool, nullptr, TrainingConfig{});
  EXPECT_EQ(plain.labeled.size(), split.n_labeled() * 2);
  EXPECT_TRUE(plain.pairs.empty());
}

TEST(AssembleBatch, SizesKindsAndDeterminism) {
  const auto pool = make_pool(10, 10);
  const auto split = split_dataset(pool, 0.8, 0.25, 2);
  const auto syn = fake_synthetic(pool, split);
  TrainingConfig cfg;
  cfg.batch_labeled = 3;
  cfg.batch_unlabeled = 40;
  const auto pools = build_training_pools(split, pool, &syn, cfg);
  const auto a = assemble_batch(pools, cfg, 17);
  const auto b = assemble_batch(pools, cfg, 17);
  ASSERT_EQ(a.labeled.size(), 3u);
  ASSERT_EQ(a.pairs.size(), 40u);
  EXPECT_EQ(batch_fingerprint(a), batch_fingerprint(b));
  EXPECT_NE(batch_fingerprint(a), batch_fingerprint(assemble_batch(pools, cfg, 18)));
  std::set<PairKind> kinds;
  for (const auto& p : a.pairs) {
    EXPECT_TRUE(p.is_consistent());
    kinds.insert(p.kind);
  }
  EXPECT_EQ(kinds.size(), 4u);
  EXPECT_FALSE(a.labeled_with_replacement);
}

TEST(AssembleBatch, EveryPairKindIsDrawnAcrossManyBatches) {
  const auto pool = make_pool(10, 10);
  const auto split = split_dataset(pool, 0.8, 0.25, 2);
  const auto syn = fake_synthetic(pool, split);
  TrainingConfig cfg;
  cfg.batch_labeled = 1;
  cfg.batch_unlabeled = 2;
  const auto pools = build_training_pools(split, pool, &syn, cfg);
  std::map<PairKind, int> counts;
  for (std::uint64_t step = 0; step < 1000; ++step) {
    for (const auto& p : assemble_batch(pools, cfg, step).pairs) ++counts[p.kind];
  }
  for (PairKind kind : kAllPairKinds) {
    EXPECT_GT(counts[kind], 0) << to_string(kind);
    // Uniform over kinds: 500 expected of 2000 draws.
    EXPECT_NEAR(counts[kind], 500, 100) << to_string(kind);
  }
}

TEST(AssembleBatch, OversizedRequestFallsBackToReplacement) {
  TrainingPools pools;
  pools.labeled.push_back({{Grid2D<float>(2, 2), ImageKind::kS, "s/0"},
                           {Grid2D<std::uint8_t>(2, 2)}});
  TrainingConfig cfg;
  cfg.batch_labeled = 4;
  cfg.batch_unlabeled = 0;
  const auto batch = assemble_batch(pools, cfg, 1);
  EXPECT_EQ(batch.labeled.size(), 4u);
  EXPECT_TRUE(batch.labeled_with_replacement);
  cfg.batch_unlabeled = 1;
  EXPECT_THROW(assemble_batch(pools, cfg, 1), InvalidInput);
  EXPECT_THROW(assemble_batch(TrainingPools{}, cfg, 1), InvalidInput);
}

TEST(LabeledSlices, RequiresMasks) {
  std::vector<Subject> pool{make_subject("a", Domain::kTarget, 3, false),
                            make_subject("b", Domain::kTarget, 3, true)};
  EXPECT_EQ(labeled_slices(pool, std::vector<std::string>{"b"}).size(), 3u);
  EXPECT_THROW(labeled_slices(pool, std::vector<std::string>{"a"}), InvalidInput);
  EXPECT_THROW(labeled_slices(pool, std::vector<std::string>{"zz"}), InvalidInput);
}

}  // namespace
}  // namespace leuda
