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

#include "leuda/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace leuda {

std::string_view to_string(ImageKind kind) {
  switch (kind) {
    case ImageKind::kS: return "S";
    case ImageKind::kT: return "T";
    case ImageKind::kS2T: return "S2T";
    case ImageKind::kT2S: return "T2S";
    case ImageKind::kS2T2S: return "S2T2S";
    case ImageKind::kT2S2T: return "T2S2T";
  }
  return "?";
}

ImageKind parse_image_kind(std::string_view text) {
  for (ImageKind kind : kAllImageKinds) {
    if (to_string(kind) == text) return kind;
  }
  throw InvalidInput("unknown image kind: " + std::string(text));
}

bool is_source_style(ImageKind kind) {
  return kind == ImageKind::kS || kind == ImageKind::kT2S ||
         kind == ImageKind::kS2T2S;
}

bool is_target_style(ImageKind kind) { return !is_source_style(kind); }

bool in_source_like_domain(ImageKind kind) {
  return kind == ImageKind::kT2S || kind == ImageKind::kS2T2S;
}

bool in_target_like_domain(ImageKind kind) {
  return kind == ImageKind::kS2T || kind == ImageKind::kT2S2T;
}

void ImageTensor::validate() const {
  if (pixels.height <= 0 || pixels.width <= 0) {
    throw InvalidInput("ImageTensor: empty spatial dimensions");
  }
  if (pixels.size() != static_cast<std::size_t>(pixels.height) * pixels.width) {
    throw InvalidInput("ImageTensor: storage does not match dimensions");
  }
  if (!std::all_of(pixels.values.begin(), pixels.values.end(),
                   [](float v) { return std::isfinite(v); })) {
    throw InvalidInput("ImageTensor: non-finite value in " + slice_id);
  }
}

void SegMask::validate(int num_classes) const {
  for (std::uint8_t v : labels.values) {
    if (v >= num_classes) {
      throw InvalidInput("SegMask: label " + std::to_string(v) +
                         " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

bool ProbMap::is_valid(double tolerance) const {
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  if (probs.size() != plane * classes) return false;
  for (float p : probs) {
    if (!(p >= 0.0f && p <= 1.0f)) return false;
  }
  for (std::size_t i = 0; i < plane; ++i) {
    double sum = 0.0;
    for (int c = 0; c < classes; ++c) sum += probs[c * plane + i];
    if (std::abs(sum - 1.0) > tolerance) return false;
  }
  return true;
}

std::string_view to_string(Domain domain) {
  return domain == Domain::kSource ? "source" : "target";
}

Domain parse_domain(std::string_view text) {
  if (text == "source") return Domain::kSource;
  if (text == "target") return Domain::kTarget;
  throw InvalidInput("unknown domain: " + std::string(text));
}

void Subject::validate() const {
  for (const auto& slice : slices) slice.validate();
  if (masks) {
    if (masks->size() != slices.size()) {
      throw InvalidInput("Subject " + id + ": mask count does not match slices");
    }
    for (std::size_t i = 0; i < slices.size(); ++i) {
      if ((*masks)[i].height() != slices[i].height() ||
          (*masks)[i].width() != slices[i].width()) {
        throw InvalidInput("Subject " + id + ": mask/image shape mismatch");
      }
    }
  }
}

double DatasetSplit::realized_label_ratio() const {
  const std::size_t total = n_labeled() + n_unlabeled();
  return total == 0 ? 0.0 : static_cast<double>(n_labeled()) / total;
}

std::string_view to_string(PairKind kind) {
  switch (kind) {
    case PairKind::kSourceAndS2T: return "S|S2T";
    case PairKind::kCycleSourceAndS2T: return "S2T2S|S2T";
    case PairKind::kT2SAndTarget: return "T2S|T";
    case PairKind::kT2SAndCycleTarget: return "T2S|T2S2T";
  }
  return "?";
}

PairKind parse_pair_kind(std::string_view text) {
  for (PairKind kind : kAllPairKinds) {
    if (to_string(kind) == text) return kind;
  }
  throw InvalidInput("unknown pair kind: " + std::string(text));
}

std::pair<ImageKind, ImageKind> member_kinds(PairKind kind) {
  switch (kind) {
    case PairKind::kSourceAndS2T: return {ImageKind::kS, ImageKind::kS2T};
    case PairKind::kCycleSourceAndS2T: return {ImageKind::kS2T2S, ImageKind::kS2T};
    case PairKind::kT2SAndTarget: return {ImageKind::kT2S, ImageKind::kT};
    case PairKind::kT2SAndCycleTarget: return {ImageKind::kT2S, ImageKind::kT2S2T};
  }
  throw InvalidInput("member_kinds: bad pair kind");
}

bool PairedSample::is_consistent() const {
  const auto [src, tgt] = member_kinds(kind);
  return source_style.kind == src && target_style.kind == tgt &&
         source_style.slice_id == target_style.slice_id &&
         source_style.pixels.same_shape(target_style.pixels);
}

std::string_view to_string(GanLossVariant variant) {
  return variant == GanLossVariant::kLog ? "log" : "least_squares";
}

GanLossVariant parse_gan_loss_variant(std::string_view text) {
  if (text == "log") return GanLossVariant::kLog;
  if (text == "least_squares") return GanLossVariant::kLeastSquares;
  throw InvalidInput("unknown GAN loss variant: " + std::string(text));
}

void TrainingConfig::validate() const {
  if (!(ema_alpha >= 0.0 && ema_alpha <= 1.0)) {
    throw InvalidInput("ema_alpha must lie in [0, 1]");
  }
  if (t_max <= 0) throw InvalidInput("t_max must be positive");
  if (warmup_epochs < 0 || warmup_epochs > t_max) {
    throw InvalidInput("warmup_epochs must lie in [0, t_max]");
  }
  for (double w : l_max) {
    if (w < 0.0) throw InvalidInput("L_max entries must be non-negative");
  }
  if (layer_set.empty()) throw InvalidInput("layer_set must be non-empty");
  if (!std::is_sorted(layer_set.begin(), layer_set.end()) ||
      std::adjacent_find(layer_set.begin(), layer_set.end()) != layer_set.end()) {
    throw InvalidInput("layer_set must be strictly increasing");
  }
  if (layer_set.front() != 1) {
    throw InvalidInput("layer_set must contain the main head (level 1)");
  }
  if (lambda_seg_per_level.size() != layer_set.size() ||
      lambda_adv_per_level.size() != layer_set.size()) {
    throw InvalidInput("per-level weights must match layer_set size");
  }
  for (double w : lambda_seg_per_level) {
    if (w < 0.0) throw InvalidInput("lambda_seg entries must be non-negative");
  }
  for (double w : lambda_adv_per_level) {
    if (w < 0.0) throw InvalidInput("lambda_adv entries must be non-negative");
  }
  if (lr_peak < 0.0) throw InvalidInput("lr_peak must be non-negative");
  if (!(disc_lr_scale > 0.0)) throw InvalidInput("disc_lr_scale must be positive");
  if (batch_labeled < 0 || batch_unlabeled < 0) {
    throw InvalidInput("batch sizes must be non-negative");
  }
  if (noise_sigma < 0.0) throw InvalidInput("noise_sigma must be non-negative");
  if (iterations_per_epoch < 0) {
    throw InvalidInput("iterations_per_epoch must be non-negative");
  }
}

std::uint64_t mix_seed(std::uint64_t value) {
  value += 0x9e3779b97f4a7c15ULL;
  value = (value ^ (value >> 30)) * 0xbf58476d1ce4e5b9ULL;
  value = (value ^ (value >> 27)) * 0x94d049bb133111ebULL;
  return value ^ (value >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(mix_seed(base) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

}  // namespace leuda
