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

// U-Net segmenter with deeply supervised auxiliary heads, and the five-layer
// fully convolutional discriminator used for prediction-space alignment.

#ifndef LEUDA_NETWORKS_HPP_
#define LEUDA_NETWORKS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "leuda/types.hpp"

namespace leuda {

struct SegmenterConfig {
  int in_channels = 1;
  /// Number of 2x downsamplings; also the number of decoder blocks.
  int depth = 4;
  int base_width = 16;
  int num_classes = kDefaultNumClasses;
  /// Decoder blocks counted from the output that get a prediction head;
  /// level 1 is the final block and always present.
  std::vector<int> aux_levels{1, 3};
  /// GroupNorm after each 3x3 convolution.
  bool group_norm = true;
  std::uint64_t seed = 0;

  void validate() const;
  /// Throws InvalidInput unless both dims are divisible by 2^depth.
  void check_input(std::int64_t height, std::int64_t width) const;
};

struct LevelOutput {
  int level = 1;
  /// (B, C, H, W), upsampled to the input resolution.
  torch::Tensor logits;
  /// Softmax over the class axis of `logits`.
  torch::Tensor probs;
};

/// Outputs ordered by increasing level; levels.front() is the main head.
struct MultiLevelOutput {
  std::vector<LevelOutput> levels;

  const LevelOutput& main() const { return levels.front(); }
  const LevelOutput& at_level(int level) const;
  /// Rows [begin, end) of every level.
  MultiLevelOutput slice(std::int64_t begin, std::int64_t end) const;
  MultiLevelOutput detached() const;
};

class SegmenterImpl : public torch::nn::Module {
 public:
  explicit SegmenterImpl(SegmenterConfig config);

  /// (B, in_channels, H, W) -> per-level logits and probabilities.
  MultiLevelOutput forward(const torch::Tensor& images);

  const SegmenterConfig& config() const { return config_; }
  /// Prediction head for `level` (a 1x1 convolution).
  torch::nn::Conv2d& head(int level);

 private:
  SegmenterConfig config_;
  torch::nn::ModuleList encoder_{nullptr};
  torch::nn::Sequential bottleneck_{nullptr};
  torch::nn::ModuleList upsamplers_{nullptr};
  torch::nn::ModuleList decoder_{nullptr};
  std::vector<torch::nn::Conv2d> heads_;
};
TORCH_MODULE(Segmenter);

/// Deterministically initialized from `config.seed`.
Segmenter build_segmenter(const SegmenterConfig& config);

/// Student/teacher forward pass over a batch of images.
MultiLevelOutput forward_multi_level(Segmenter& segmenter, const torch::Tensor& images);
MultiLevelOutput forward_multi_level(Segmenter& segmenter, const ImageTensor& image);

struct DiscriminatorConfig {
  int in_channels = kDefaultNumClasses;
  /// Channels of the first layer; later hidden layers double it. The reference
  /// design uses 64, giving 64, 128, 256, 512, 1.
  int base_width = 64;
  int num_layers = 5;
  int kernel_size = 4;
  int stride = 2;
  int padding = 1;
  double negative_slope = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
  /// Output channels of every layer, last layer included.
  std::vector<int> channel_progression() const;
  /// Spatial output size for an input extent of `size`.
  std::int64_t output_extent(std::int64_t size) const;
};

class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(DiscriminatorConfig config);

  /// (B, in_channels, H, W) -> (B, 1, h, w) raw scores. Throws InvalidInput
  /// when an input side is smaller than 2^num_layers.
  torch::Tensor forward(const torch::Tensor& x);

  /// Every layer's output, post-activation for hidden layers.
  std::vector<torch::Tensor> forward_layers(const torch::Tensor& x);

  const DiscriminatorConfig& config() const { return config_; }
  std::vector<torch::nn::Conv2d>& layers() { return convs_; }

 private:
  DiscriminatorConfig config_;
  std::vector<torch::nn::Conv2d> convs_;
};
TORCH_MODULE(Discriminator);

Discriminator build_discriminator(const DiscriminatorConfig& config);
Discriminator build_discriminator(int in_channels);

std::int64_t parameter_count(const torch::nn::Module& module);

/// Layer list with output shapes for a given input size, plus the parameter
/// count.
nlohmann::json describe(Segmenter& segmenter, std::int64_t height, std::int64_t width);
nlohmann::json describe(Discriminator& discriminator, std::int64_t height,
                        std::int64_t width);

/// Copies parameter and buffer values from `from` into `to` (same layout).
void copy_state(const torch::nn::Module& from, torch::nn::Module& to);

}  // namespace leuda

#endif  // LEUDA_NETWORKS_HPP_
