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

// Subject-level Dice and average symmetric surface distance (ASD).
//
// Volumes are stacks of 2D slices indexed (slice, row, column). Surfaces are
// foreground voxels with at least one face-adjacent background neighbour,
// where out-of-volume counts as background. ASD is measured between voxel
// centers in physical units given by the per-axis spacing, and is the mean of
// the two directed mean surface distances.

#ifndef LEUDA_METRICS_HPP_
#define LEUDA_METRICS_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leuda/types.hpp"

namespace leuda {

template <typename T>
struct Volume {
  int depth = 0;
  int height = 0;
  int width = 0;
  std::vector<T> voxels;

  Volume() = default;
  Volume(int d, int h, int w, T fill = T{})
      : depth(d), height(h), width(w),
        voxels(static_cast<std::size_t>(d) * h * w, fill) {}

  std::size_t index(int z, int y, int x) const {
    return (static_cast<std::size_t>(z) * height + y) * width + x;
  }
  T& at(int z, int y, int x) { return voxels[index(z, y, x)]; }
  const T& at(int z, int y, int x) const { return voxels[index(z, y, x)]; }
  bool same_shape(const Volume& o) const {
    return depth == o.depth && height == o.height && width == o.width;
  }
};

using LabelVolume = Volume<std::uint8_t>;
/// Non-zero voxels are foreground.
using BinaryVolume = Volume<std::uint8_t>;

/// Physical voxel size along (slice, row, column).
using Spacing = std::array<double, 3>;

struct Voxel {
  int z = 0;
  int y = 0;
  int x = 0;
  friend bool operator==(const Voxel&, const Voxel&) = default;
  friend auto operator<=>(const Voxel&, const Voxel&) = default;
};

/// Stacks per-slice masks into a volume. Throws InvalidInput on mismatched
/// slice shapes.
LabelVolume stack_masks(std::span<const SegMask> masks);
BinaryVolume binarize(const LabelVolume& labels, int cls);

/// 2|P and G| / (|P| + |G|); 1.0 when both are empty.
double dice(const LabelVolume& pred, const LabelVolume& gt, int cls);

enum class Connectivity { kFace };

/// Surface voxels in raster order.
std::vector<Voxel> extract_surface(const BinaryVolume& mask,
                                   Connectivity connectivity = Connectivity::kFace);

/// Exact Euclidean distance from every voxel to the nearest non-zero voxel of
/// `sites`, in physical units. Infinity everywhere when `sites` is empty.
Volume<double> distance_to(const BinaryVolume& sites, const Spacing& spacing);

/// Average symmetric surface distance; nullopt when either surface is empty.
std::optional<double> asd(const BinaryVolume& pred, const BinaryVolume& gt,
                          const Spacing& spacing);

/// Per-foreground-class metrics for one subject. Index k refers to class k+1.
struct SubjectResult {
  std::string subject_id;
  std::vector<double> dice;
  std::vector<std::optional<double>> asd;
  /// Whether the class occurs in the ground truth.
  std::vector<bool> present;

  std::size_t num_foreground() const { return dice.size(); }
};

/// Computes Dice and ASD for classes 1..num_classes-1.
SubjectResult evaluate_volume(const std::string& subject_id, const LabelVolume& pred,
                              const LabelVolume& gt, const Spacing& spacing,
                              int num_classes = kDefaultNumClasses);

struct Summary {
  double mean = 0.0;
  /// Population standard deviation.
  double std = 0.0;
  int count = 0;
};

/// Population mean and std of the values; nullopt for an empty list.
std::optional<Summary> summarize(std::span<const double> values);

struct AggregateResult {
  std::vector<std::optional<Summary>> dice;
  std::vector<std::optional<Summary>> asd;
  /// Across-subject summary of each subject's class-averaged score.
  std::optional<Summary> mean_dice;
  std::optional<Summary> mean_asd;
  int subjects = 0;
};

/// Throws InvalidInput for an empty list or inconsistent class counts.
AggregateResult aggregate(std::span<const SubjectResult> results);

/// "mean(std)" after multiplying by `scale`; "N/A" for nullopt.
std::string format_mean_std(const std::optional<Summary>& summary, double scale = 1.0,
                            int precision = 1);

/// Markdown table with one row per labeled result, Dice in percent and ASD in
/// spacing units, per class plus the average.
std::string format_results_table(
    std::span<const std::pair<std::string, AggregateResult>> rows,
    std::span<const std::string> class_names);

nlohmann::json to_json(const SubjectResult& result);
nlohmann::json to_json(const AggregateResult& result);

}  // namespace leuda

#endif  // LEUDA_METRICS_HPP_
