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

#ifndef LEUDA_TYPES_HPP_
#define LEUDA_TYPES_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace leuda {

/// Raised when an operation's preconditions are violated by its arguments.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when training produces a non-finite loss.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Background plus four foreground structures.
inline constexpr int kDefaultNumClasses = 5;

/// Row-major 2D grid. Value type; copies are deep.
template <typename T>
struct Grid2D {
  int height = 0;
  int width = 0;
  std::vector<T> values;

  Grid2D() = default;
  Grid2D(int h, int w, T fill = T{}) : height(h), width(w) {
    if (h < 0 || w < 0) throw InvalidInput("Grid2D: negative dimension");
    values.assign(static_cast<std::size_t>(h) * w, fill);
  }

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }

  T& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int y, int x) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }

  bool same_shape(const Grid2D& other) const {
    return height == other.height && width == other.width;
  }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

/// Provenance of an image: original source/target or one of the synthetic
/// translation products.
enum class ImageKind : std::uint8_t { kS, kT, kS2T, kT2S, kS2T2S, kT2S2T };

inline constexpr std::array<ImageKind, 6> kAllImageKinds = {
    ImageKind::kS,   ImageKind::kT,     ImageKind::kS2T,
    ImageKind::kT2S, ImageKind::kS2T2S, ImageKind::kT2S2T};

std::string_view to_string(ImageKind kind);
ImageKind parse_image_kind(std::string_view text);

/// S, T2S and S2T2S look like source images.
bool is_source_style(ImageKind kind);
/// T, S2T and T2S2T look like target images.
bool is_target_style(ImageKind kind);
/// Members of the synthetic source-like domain (T2S, S2T2S).
bool in_source_like_domain(ImageKind kind);
/// Members of the synthetic target-like domain (S2T, T2S2T).
bool in_target_like_domain(ImageKind kind);

/// Single-channel slice in z-normalized intensity units.
struct ImageTensor {
  Grid2D<float> pixels;
  ImageKind kind = ImageKind::kS;
  /// Identifier of the original slice this image derives from.
  std::string slice_id;

  int height() const { return pixels.height; }
  int width() const { return pixels.width; }

  /// Throws InvalidInput on empty dims or non-finite values.
  void validate() const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;
};

/// Integer class labels in [0, C).
struct SegMask {
  Grid2D<std::uint8_t> labels;

  int height() const { return labels.height; }
  int width() const { return labels.width; }
  void validate(int num_classes) const;

  friend bool operator==(const SegMask&, const SegMask&) = default;
};

/// Per-pixel class probabilities, layout (C, H, W).
struct ProbMap {
  int classes = 0;
  int height = 0;
  int width = 0;
  std::vector<float> probs;

  float at(int c, int y, int x) const {
    return probs[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  /// Entries in [0, 1] and per-pixel sums within `tolerance` of one.
  bool is_valid(double tolerance = 1e-5) const;
};

enum class Domain : std::uint8_t { kSource, kTarget };

std::string_view to_string(Domain domain);
Domain parse_domain(std::string_view text);

struct Subject {
  std::string id;
  Domain domain = Domain::kSource;
  /// Imaging modality tag, e.g. "A" or "B".
  std::string modality;
  std::vector<ImageTensor> slices;
  /// When present, aligned slice-for-slice with `slices`.
  std::optional<std::vector<SegMask>> masks;
  /// Voxel spacing as (slice, row, column).
  std::array<double, 3> spacing{1.0, 1.0, 1.0};

  void validate() const;
};

struct LabeledImage {
  ImageTensor image;
  SegMask mask;
};

/// Subject-level partition of a two-domain pool.
struct DatasetSplit {
  std::vector<std::string> labeled_source;
  std::vector<std::string> unlabeled_source;
  std::vector<std::string> source_test;
  std::vector<std::string> target;
  std::vector<std::string> target_test;
  double label_ratio = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  std::size_t n_labeled() const { return labeled_source.size(); }
  std::size_t n_unlabeled() const { return unlabeled_source.size(); }
  /// n_l / (n_l + n_u) as realized by the partition.
  double realized_label_ratio() const;
};

/// The four anatomy-matched pairings produced by bidirectional translation.
enum class PairKind : std::uint8_t {
  kSourceAndS2T,       // [x^s, x^{s->t}]
  kCycleSourceAndS2T,  // [x^{s->t->s}, x^{s->t}]
  kT2SAndTarget,       // [x^{t->s}, x^t]
  kT2SAndCycleTarget,  // [x^{t->s}, x^{t->s->t}]
};

inline constexpr std::array<PairKind, 4> kAllPairKinds = {
    PairKind::kSourceAndS2T, PairKind::kCycleSourceAndS2T,
    PairKind::kT2SAndTarget, PairKind::kT2SAndCycleTarget};

std::string_view to_string(PairKind kind);
PairKind parse_pair_kind(std::string_view text);
/// Kinds of the (source-style, target-style) members for a pair kind.
std::pair<ImageKind, ImageKind> member_kinds(PairKind kind);

struct PairedSample {
  ImageTensor source_style;
  ImageTensor target_style;
  PairKind kind = PairKind::kSourceAndS2T;

  /// Both members trace to one slice and carry kinds matching `kind`.
  bool is_consistent() const;
};

/// Products of bidirectional translation over the training partitions.
struct SyntheticDomains {
  /// x^{t->s} and x^{s->t->s}.
  std::vector<ImageTensor> source_like;
  /// x^{s->t} and x^{t->s->t}.
  std::vector<ImageTensor> target_like;
  std::vector<PairedSample> pairs;
  /// x^{s->t} of labeled source slices carrying y^s.
  std::vector<LabeledImage> labeled_target_like;
  /// x^{s->t->s} of labeled source slices carrying y^s.
  std::vector<LabeledImage> labeled_cycle_source;
};

struct AugmentParams {
  double rotation_degrees = 15.0;
  double scale_min = 0.9;
  double scale_max = 1.1;
  double shear_degrees = 8.0;

  bool is_identity() const {
    return rotation_degrees == 0.0 && scale_min == 1.0 && scale_max == 1.0 &&
           shear_degrees == 0.0;
  }
};

enum class GanLossVariant : std::uint8_t { kLog, kLeastSquares };
std::string_view to_string(GanLossVariant variant);
GanLossVariant parse_gan_loss_variant(std::string_view text);

enum class EmaCadence : std::uint8_t { kIteration, kEpoch };
enum class DiscriminatorInput : std::uint8_t { kProbabilities, kSelfInformation };

/// Hyperparameters of the joint teacher-student stage.
struct TrainingConfig {
  double ema_alpha = 0.99;
  int t_max = 150;
  /// Maximum ramp-up values for (con_intra, adv_intra, con_inter, adv_inter).
  std::array<double, 4> l_max{1.0, 0.01, 0.1, 0.01};
  /// Decoder levels counted from the output; level 1 is the main head.
  std::vector<int> layer_set{1, 3};
  std::vector<double> lambda_seg_per_level{1.0, 0.1};
  std::vector<double> lambda_adv_per_level{1.0, 0.1};
  double lr_peak = 0.005;
  /// Discriminator lr as a multiple of the student lr at every epoch.
  double disc_lr_scale = 1.0;
  int warmup_epochs = 30;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  int batch_labeled = 8;
  int batch_unlabeled = 8;
  /// Zero selects one pass over the unlabeled pair pool.
  int iterations_per_epoch = 0;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
  GanLossVariant gan_loss_variant = GanLossVariant::kLog;
  EmaCadence ema_per = EmaCadence::kIteration;
  DiscriminatorInput discriminator_input = DiscriminatorInput::kProbabilities;
  /// Labeled cycle-source copies x^{s->t->s} join the supervised batch.
  bool labeled_cycle_source = true;
  /// x^{s->t->s} joins the intra-teacher consistency pool.
  bool intra_include_cycle_source = false;
  bool augment = true;
  AugmentParams augment_params{};
  std::vector<PairKind> pair_kinds{kAllPairKinds.begin(), kAllPairKinds.end()};

  /// Throws InvalidInput when an invariant fails.
  void validate() const;
};

/// SplitMix64 step; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t value);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace leuda

#endif  // LEUDA_TYPES_HPP_
