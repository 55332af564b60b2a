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
#include <map>
#include <numeric>
#include <set>

#include "leuda/synthdata.hpp"

namespace leuda {
namespace {

PhantomSpec small_spec() {
  PhantomSpec spec;
  spec.n_subjects = 3;
  spec.slices_per_subject = 4;
  spec.image_size = 32;
  spec.canvas_margin = 4;
  return spec;
}

std::map<int, std::size_t> histogram(const SegMask& m) {
  std::map<int, std::size_t> h;
  for (auto v : m.labels.values) ++h[v];
  return h;
}

TEST(Phantoms, ShapesIdsAndLabels) {
  const auto spec = small_spec();
  const auto data = generate_phantoms(spec);
  ASSERT_EQ(data.source.size(), 3u);
  ASSERT_EQ(data.target.size(), 3u);
  std::set<std::string> ids;
  for (const auto* domain : {&data.source, &data.target}) {
    for (const auto& s : *domain) {
      EXPECT_TRUE(ids.insert(s.id).second);
      EXPECT_NO_THROW(s.validate());
      ASSERT_TRUE(s.masks.has_value());
      ASSERT_EQ(s.slices.size(), 4u);
      for (std::size_t z = 0; z < s.slices.size(); ++z) {
        EXPECT_EQ(s.slices[z].height(), 32);
        EXPECT_EQ(s.slices[z].width(), 32);
        EXPECT_EQ(s.slices[z].kind, s.domain == Domain::kSource ? ImageKind::kS : ImageKind::kT);
        EXPECT_NO_THROW((*s.masks)[z].validate(kDefaultNumClasses));
      }
    }
  }
}

TEST(Phantoms, EveryStructureAppearsInEverySubject) {
  const auto data = generate_phantoms(small_spec());
  for (const auto& s : data.source) {
    std::set<int> labels;
    for (const auto& m : *s.masks) {
      for (auto v : m.labels.values) labels.insert(v);
    }
    EXPECT_EQ(labels.size(), static_cast<std::size_t>(kDefaultNumClasses)) << s.id;
  }
}

TEST(Phantoms, VolumesAreZScored) {
  const auto data = generate_phantoms(small_spec());
  for (const auto& s : data.target) {
    std::vector<double> v;
    for (const auto& slice : s.slices) {
      v.insert(v.end(), slice.pixels.values.begin(), slice.pixels.values.end());
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= v.size();
    EXPECT_NEAR(mean, 0.0, 1e-5);
    EXPECT_NEAR(std::sqrt(var), 1.0, 1e-4);
  }
}

TEST(Phantoms, DeterministicPerSeed) {
  const auto a = generate_phantoms(small_spec());
  const auto b = generate_phantoms(small_spec());
  EXPECT_EQ(a.source[1].slices[2], b.source[1].slices[2]);
  EXPECT_EQ((*a.target[0].masks)[3], (*b.target[0].masks)[3]);
  auto other = small_spec();
  other.seed += 1;
  EXPECT_NE(generate_phantoms(other).source[1].slices[2], a.source[1].slices[2]);
}

TEST(Phantoms, ModalitiesDifferInAppearance) {
  const auto data = generate_phantoms(small_spec());
  const auto a = mean_label_intensity(data.source);
  const auto b = mean_label_intensity(data.target);
  double gap = 0.0;
  for (int c = 0; c < kDefaultNumClasses; ++c) gap += std::abs(a[c] - b[c]);
  EXPECT_GT(gap / kDefaultNumClasses, 0.2);
}

TEST(Phantoms, IdenticalAppearanceFailsGapCheck) {
  auto spec = small_spec();
  spec.target_appearance = spec.source_appearance;
  EXPECT_THROW(generate_phantoms(spec), InvalidInput);
  spec.min_intensity_gap = 0.0;
  EXPECT_NO_THROW(generate_phantoms(spec));
}

TEST(Phantoms, InvalidSpecsThrow) {
  auto spec = small_spec();
  spec.n_subjects = 0;
  EXPECT_THROW(generate_phantoms(spec), InvalidInput);
  spec = small_spec();
  spec.image_size = 4;
  EXPECT_THROW(generate_phantoms(spec), InvalidInput);
}

TEST(Phantoms, SwapDomainsExchangesRoles) {
  const auto data = generate_phantoms(small_spec());
  const auto swapped = swap_domains(data);
  EXPECT_EQ(swapped.source.front().modality, "B");
  EXPECT_EQ(swapped.source.front().domain, Domain::kSource);
  EXPECT_EQ(swapped.source.front().slices.front().kind, ImageKind::kS);
  EXPECT_EQ(swapped.target.front().modality, "A");
  EXPECT_EQ(swapped.target.front().slices.front().kind, ImageKind::kT);
}

TEST(ZScore, MatchesClosedForm) {
  const std::vector<float> v{1.0f, 2.0f, 3.0f, 4.0f};
  const auto z = zscore_normalize(v);
  const double sd = std::sqrt(1.25);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(z[i], (v[i] - 2.5) / sd, 1e-6);
  EXPECT_THROW(zscore_normalize(std::vector<float>{2.0f, 2.0f}), InvalidInput);
  EXPECT_THROW(zscore_normalize(std::vector<float>{}), InvalidInput);
}

TEST(CropCenter, ExtractsWindowAndShiftsInward) {
  Grid2D<float> g(6, 6);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) g.at(y, x) = static_cast<float>(10 * y + x);
  }
  const auto c = crop_center(g, 2);
  EXPECT_EQ(c.at(0, 0), 22.0f);
  const auto corner = crop_center(g, 4, std::make_pair(0.0, 0.0));
  EXPECT_EQ(corner.at(0, 0), 0.0f);
  EXPECT_THROW(crop_center(g, 7), InvalidInput);
}

TEST(Augment, IdentityLeavesInputsUnchanged) {
  const auto data = generate_phantoms(small_spec());
  const auto& img = data.source[0].slices[1];
  const auto& mask = (*data.source[0].masks)[1];
  AugmentParams none{0.0, 1.0, 1.0, 0.0};
  const auto [out_img, out_mask] = augment(img, mask, none, 5);
  EXPECT_EQ(out_img, img);
  EXPECT_EQ(out_mask, mask);
}

TEST(Augment, QuarterTurnPreservesLabelHistogram) {
  const auto data = generate_phantoms(small_spec());
  const auto& mask = (*data.source[0].masks)[2];
  const auto& img = data.source[0].slices[2];
  const auto [rot_img, rot_mask] = apply_transform(img, mask, AffineTransform::compose(90, 1, 0));
  EXPECT_EQ(histogram(rot_mask), histogram(mask));
  EXPECT_NE(rot_mask, mask);
}

TEST(Augment, LabelsStayWithinInputLabelSet) {
  const auto data = generate_phantoms(small_spec());
  AugmentParams wide{40.0, 0.7, 1.3, 20.0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto& mask = (*data.target[seed % 3].masks)[seed % 4];
    const auto& img = data.target[seed % 3].slices[seed % 4];
    const auto [out_img, out_mask] = augment(img, mask, wide, seed);
    std::set<int> in, out;
    for (auto v : mask.labels.values) in.insert(v);
    for (auto v : out_mask.labels.values) out.insert(v);
    EXPECT_TRUE(std::includes(in.begin(), in.end(), out.begin(), out.end()));
    EXPECT_NO_THROW(out_img.validate());
  }
}

TEST(Augment, ImageOnlyWarpMatchesPairedWarp) {
  const auto data = generate_phantoms(small_spec());
  const auto& img = data.source[1].slices[0];
  const auto& mask = (*data.source[1].masks)[0];
  const auto t = sample_transform(AugmentParams{}, 3);
  EXPECT_EQ(apply_transform(img, t), apply_transform(img, mask, t).first);
}

TEST(Augment, MisalignedOrSingularInputsThrow) {
  ImageTensor img{Grid2D<float>(4, 4), ImageKind::kS, "x/0"};
  SegMask mask{Grid2D<std::uint8_t>(4, 5)};
  EXPECT_THROW(apply_transform(img, mask, AffineTransform::compose(10, 1, 0)), InvalidInput);
  SegMask ok{Grid2D<std::uint8_t>(4, 4)};
  EXPECT_THROW(apply_transform(img, ok, AffineTransform{0, 0, 0, 0}), InvalidInput);
}

TEST(Perturb, NoiseHasRequestedScaleAndIsSeeded) {
  ImageTensor img{Grid2D<float>(64, 64, 0.0f), ImageKind::kS, "x/0"};
  const auto a = perturb(img, 0.1, 4);
  double sq = 0.0;
  for (float v : a.pixels.values) sq += v * v;
  EXPECT_NEAR(std::sqrt(sq / a.pixels.size()), 0.1, 0.01);
  EXPECT_EQ(a, perturb(img, 0.1, 4));
  EXPECT_NE(a, perturb(img, 0.1, 5));
  EXPECT_EQ(perturb(img, 0.0, 4), img);
  EXPECT_THROW(perturb(img, -1.0, 4), InvalidInput);
}

}  // namespace
}  // namespace leuda
