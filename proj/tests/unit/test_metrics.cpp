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

#include <cmath>
#include <random>

#include "leuda/metrics.hpp"
#include "metric_oracles.hpp"

namespace leuda {
namespace {

using testing::oracle_asd;
using testing::oracle_dice;
using testing::oracle_surface;
using testing::random_volume;

TEST(Dice, TabulatedExamples) {
  LabelVolume p(1, 1, 4), g(1, 1, 4);
  p.at(0, 0, 0) = p.at(0, 0, 1) = 1;
  g.at(0, 0, 1) = g.at(0, 0, 2) = 1;
  EXPECT_DOUBLE_EQ(dice(p, g, 1), 0.5);
  EXPECT_DOUBLE_EQ(dice(p, p, 1), 1.0);
  EXPECT_DOUBLE_EQ(dice(p, g, 2), 1.0);
  LabelVolume q(1, 1, 4);
  q.at(0, 0, 3) = 1;
  EXPECT_DOUBLE_EQ(dice(p, q, 1), 0.0);
  EXPECT_THROW(dice(p, LabelVolume(1, 2, 2), 1), InvalidInput);
}

TEST(Surface, TabulatedExamples) {
  BinaryVolume one(3, 3, 3);
  one.at(1, 1, 1) = 1;
  EXPECT_EQ(extract_surface(one), (std::vector<Voxel>{{1, 1, 1}}));
  BinaryVolume cube(5, 5, 5);
  for (int z = 1; z < 4; ++z) for (int y = 1; y < 4; ++y) for (int x = 1; x < 4; ++x) cube.at(z, y, x) = 1;
  EXPECT_EQ(extract_surface(cube).size(), 26u);
  EXPECT_TRUE(extract_surface(BinaryVolume(2, 2, 2)).empty());
}

TEST(Asd, TabulatedExamples) {
  BinaryVolume a(1, 1, 8), b(1, 1, 8);
  a.at(0, 0, 1) = 1;
  b.at(0, 0, 4) = 1;
  EXPECT_DOUBLE_EQ(*asd(a, b, {1, 1, 1}), 3.0);
  EXPECT_DOUBLE_EQ(*asd(a, a, {1, 1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(*asd(a, b, {1, 1, 2}), 6.0);
  EXPECT_FALSE(asd(BinaryVolume(1, 1, 8), b, {1, 1, 1}).has_value());
}

TEST(DistanceTransform, MatchesBruteForce) {
  std::mt19937_64 rng(3);
  const Spacing s{2.0, 1.0, 0.5};
  for (int trial = 0; trial < 10; ++trial) {
    const auto v = binarize(random_volume(rng, 3, 7, 9, 2, 0.95), 1);
    const auto d = distance_to(v, s);
    for (int z = 0; z < 3; ++z) for (int y = 0; y < 7; ++y) for (int x = 0; x < 9; ++x) {
      double best = INFINITY;
      for (int zz = 0; zz < 3; ++zz) for (int yy = 0; yy < 7; ++yy) for (int xx = 0; xx < 9; ++xx) {
        if (!v.at(zz, yy, xx)) continue;
        const double dz = (z - zz) * s[0], dy = (y - yy) * s[1], dx = (x - xx) * s[2];
        best = std::min(best, std::sqrt(dz * dz + dy * dy + dx * dx));
      }
      if (std::isinf(best)) EXPECT_TRUE(std::isinf(d.at(z, y, x)));
      else EXPECT_NEAR(d.at(z, y, x), best, 1e-9);
    }
  }
}

TEST(MetricOracle, RandomVolumesMatchBruteForce) {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 60; ++trial) {
    const auto p = random_volume(rng, 4, 16, 16, 3, 0.3 + 0.01 * trial);
    const auto g = random_volume(rng, 4, 16, 16, 3, 0.5);
    const Spacing s{1.0 + (trial % 3), 1.0, 1.0};
    for (int c = 1; c < 3; ++c) {
      EXPECT_EQ(dice(p, g, c), oracle_dice(p, g, c));
      const auto got = asd(binarize(p, c), binarize(g, c), s);
      const auto want = oracle_asd(binarize(p, c), binarize(g, c), s);
      ASSERT_EQ(got.has_value(), want.has_value());
      if (got) EXPECT_NEAR(*got, *want, 1e-9);
    }
  }
}

TEST(Metrics, SymmetryAndTranslationInvariance) {
  std::mt19937_64 rng(8);
  const auto p = random_volume(rng, 2, 6, 6, 2, 0.6);
  const auto g = random_volume(rng, 2, 6, 6, 2, 0.6);
  EXPECT_EQ(dice(p, g, 1), dice(g, p, 1));
  EXPECT_DOUBLE_EQ(*asd(binarize(p, 1), binarize(g, 1), {1, 1, 1}),
                   *asd(binarize(g, 1), binarize(p, 1), {1, 1, 1}));
  // Embed both into a larger zero volume at an offset; with face
  // connectivity the original border voxels stay surface voxels because the
  // padding is background.
  LabelVolume P(4, 10, 10), G(4, 10, 10);
  for (int z = 0; z < 2; ++z) for (int y = 0; y < 6; ++y) for (int x = 0; x < 6; ++x) {
    P.at(z + 1, y + 2, x + 3) = p.at(z, y, x);
    G.at(z + 1, y + 2, x + 3) = g.at(z, y, x);
  }
  EXPECT_EQ(dice(P, G, 1), dice(p, g, 1));
  EXPECT_NEAR(*asd(binarize(P, 1), binarize(G, 1), {1, 1, 1}),
              *asd(binarize(p, 1), binarize(g, 1), {1, 1, 1}), 1e-12);
}

TEST(EvaluateVolume, EmptyPredictionGivesZeroDiceAndNoAsd) {
  LabelVolume gt(2, 4, 4);
  gt.at(0, 1, 1) = 1;
  gt.at(1, 2, 2) = 2;
  const auto r = evaluate_volume("s", LabelVolume(2, 4, 4), gt, {1, 1, 1}, 3);
  ASSERT_EQ(r.num_foreground(), 2u);
  EXPECT_EQ(r.dice, (std::vector<double>{0.0, 0.0}));
  EXPECT_FALSE(r.asd[0].has_value());
  EXPECT_FALSE(r.asd[1].has_value());
  EXPECT_TRUE(r.present[0]);
  const auto perfect = evaluate_volume("s", gt, gt, {1, 1, 1}, 3);
  EXPECT_EQ(perfect.dice, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(*perfect.asd[0], 0.0);
}

TEST(EvaluateVolume, StackMasksRejectsMixedShapes) {
  std::vector<SegMask> masks{{Grid2D<std::uint8_t>(2, 2)}, {Grid2D<std::uint8_t>(2, 3)}};
  EXPECT_THROW(stack_masks(masks), InvalidInput);
}

TEST(Aggregate, MeanAndPopulationStd) {
  SubjectResult a{"a", {0.6}, {1.0}, {true}};
  SubjectResult b{"b", {0.8}, {std::nullopt}, {true}};
  const std::vector<SubjectResult> rs{a, b};
  const auto agg = aggregate(rs);
  EXPECT_NEAR(agg.dice[0]->mean, 0.7, 1e-12);
  EXPECT_NEAR(agg.dice[0]->std, 0.1, 1e-12);
  EXPECT_EQ(agg.asd[0]->count, 1);
  EXPECT_EQ(agg.asd[0]->std, 0.0);
  EXPECT_EQ(agg.subjects, 2);
  EXPECT_THROW(aggregate(std::vector<SubjectResult>{}), InvalidInput);

  SubjectResult c{"c", {0.5}, {std::nullopt}, {true}};
  const auto none = aggregate(std::vector<SubjectResult>{b, c});
  EXPECT_FALSE(none.asd[0].has_value());
  EXPECT_EQ(format_mean_std(none.asd[0]), "N/A");
}

TEST(Format, MeanStdStringsAndTable) {
  EXPECT_EQ(format_mean_std(Summary{0.708, 0.0512, 4}, 100.0), "70.8(5.1)");
  SubjectResult a{"a", {0.5, 1.0}, {2.0, std::nullopt}, {true, true}};
  const std::vector<std::pair<std::string, AggregateResult>> rows{
      {"method", aggregate(std::vector<SubjectResult>{a})}};
  const std::vector<std::string> names{"X", "Y"};
  const auto table = format_results_table(rows, names);
  EXPECT_NE(table.find("| method |"), std::string::npos);
  EXPECT_NE(table.find("50.0(0.0)"), std::string::npos);
  EXPECT_NE(table.find("N/A"), std::string::npos);
}

}  // namespace
}  // namespace leuda
