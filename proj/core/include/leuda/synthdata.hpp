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

// Two-modality cardiac-like phantoms and the preprocessing, augmentation and
// input-perturbation pipeline applied to them.
//
// Each phantom slice holds a body ellipse with four structures painted in a
// fixed precedence order: an atrium-like ellipse (label 3), an aorta-like disc
// (label 4), a myocardium-like annulus (label 1) surrounding a ventricle-like
// cavity (label 2). Structure sizes follow a smooth profile along the slice
// axis so each subject forms a small volume. Modalities differ only in
// appearance: a per-label intensity table passed through a gamma curve and an
// optional contrast inversion, a linear bias field, low-frequency texture and
// additive noise.

#ifndef LEUDA_SYNTHDATA_HPP_
#define LEUDA_SYNTHDATA_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "leuda/types.hpp"

namespace leuda {

/// Closed interval used for random geometry draws.
struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Structure geometry, expressed as fractions of the image size.
struct GeometryRanges {
  std::array<Range, 2> body_axes{{{0.40, 0.44}, {0.32, 0.37}}};
  Range centroid_jitter{-0.05, 0.05};
  std::array<Range, 2> ventricle_axes{{{0.11, 0.14}, {0.09, 0.12}}};
  Range myocardium_thickness{0.045, 0.06};
  std::array<Range, 2> atrium_axes{{{0.08, 0.11}, {0.06, 0.085}}};
  Range aorta_radius{0.045, 0.06};
  Range rotation_degrees{-30.0, 30.0};

  void validate() const;
};

struct ModalityAppearance {
  float air = 0.0f;
  /// Intensity per label; index 0 is body tissue.
  std::array<float, kDefaultNumClasses> class_intensity{0.30f, 0.45f, 0.90f, 0.75f,
                                                        0.60f};
  double gamma = 1.0;
  /// Maps each tissue intensity v to 1 - v after the gamma curve.
  bool invert = false;
  double bias_amplitude = 0.10;
  double texture_amplitude = 0.04;
  double noise_sigma = 0.04;

  /// Effective tissue intensity for `label` after gamma and inversion.
  float tissue_intensity(int label) const;
};

struct PhantomSpec {
  int n_subjects = 20;
  int slices_per_subject = 8;
  int image_size = 64;
  /// Extra border rendered around the crop window on each side.
  int canvas_margin = 8;
  GeometryRanges geometry{};
  ModalityAppearance source_appearance{};
  ModalityAppearance target_appearance{.gamma = 1.2, .invert = true};
  /// Minimum mean absolute per-label gap between the modalities' normalized
  /// intensities; zero disables the check.
  double min_intensity_gap = 0.2;
  double slice_spacing = 1.0;
  std::uint64_t seed = 2024;

  void validate() const;
};

struct PhantomDataset {
  std::vector<Subject> source;
  std::vector<Subject> target;
};

/// Renders modality A as the source domain and modality B as the target
/// domain. Every slice carries a ground-truth mask and each volume is
/// z-score normalized. Throws InvalidInput on degenerate geometry or when the
/// modalities are closer than `min_intensity_gap`.
PhantomDataset generate_phantoms(const PhantomSpec& spec);

/// Exchanges the roles of the two domains (B becomes the source).
PhantomDataset swap_domains(PhantomDataset dataset);

/// Per-label mean intensity over a set of subjects; labels absent everywhere
/// yield NaN.
std::array<double, kDefaultNumClasses> mean_label_intensity(
    std::span<const Subject> subjects);

/// Returns (v - mean) / std with population std. Throws InvalidInput for a
/// zero-variance volume.
std::vector<float> zscore_normalize(std::span<const float> volume);

/// Normalizes all slices of a subject jointly.
void normalize_subject(Subject& subject);

/// Extracts an out_size x out_size window centered at `center` (row, col);
/// defaults to the grid center. The window is shifted inward when it would
/// leave the grid. Throws InvalidInput when out_size exceeds either dimension.
template <typename T>
Grid2D<T> crop_center(const Grid2D<T>& grid, int out_size,
                      std::optional<std::pair<double, double>> center = std::nullopt);

/// 2x2 linear map applied about the image center.
struct AffineTransform {
  double a00 = 1.0, a01 = 0.0, a10 = 0.0, a11 = 1.0;

  static AffineTransform compose(double rotation_degrees, double scale,
                                 double shear_degrees);
  bool is_identity() const {
    return a00 == 1.0 && a01 == 0.0 && a10 == 0.0 && a11 == 1.0;
  }
};

AffineTransform sample_transform(const AugmentParams& params, std::uint64_t seed);

/// Warps image (bilinear) and mask (nearest neighbour) by the same transform.
/// Samples falling outside the grid clamp to the nearest edge pixel.
std::pair<ImageTensor, SegMask> apply_transform(const ImageTensor& image,
                                                const SegMask& mask,
                                                const AffineTransform& transform);

/// Image-only warp; pair members share one transform this way.
ImageTensor apply_transform(const ImageTensor& image, const AffineTransform& transform);

std::pair<ImageTensor, SegMask> augment(const ImageTensor& image, const SegMask& mask,
                                        const AugmentParams& params,
                                        std::uint64_t seed);

/// Adds i.i.d. N(0, sigma^2) noise per pixel.
ImageTensor perturb(const ImageTensor& image, double sigma, std::uint64_t seed);

}  // namespace leuda

#endif  // LEUDA_SYNTHDATA_HPP_
