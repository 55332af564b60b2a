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

// Conversions between the plain value types and torch tensors.

#ifndef LEUDA_TENSOR_UTILS_HPP_
#define LEUDA_TENSOR_UTILS_HPP_

#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "leuda/types.hpp"

namespace leuda {

/// Stacks images into a (B, 1, H, W) float tensor. All images must share H, W.
torch::Tensor images_to_tensor(std::span<const ImageTensor* const> images);
torch::Tensor images_to_tensor(std::span<const ImageTensor> images);

/// Stacks masks into a (B, H, W) int64 tensor.
torch::Tensor masks_to_tensor(std::span<const SegMask* const> masks);
torch::Tensor masks_to_tensor(std::span<const SegMask> masks);

/// (1, H, W) or (H, W) tensor to an image with the given tag.
ImageTensor tensor_to_image(const torch::Tensor& tensor, ImageKind kind,
                            std::string slice_id);

/// (C, H, W) probabilities to a ProbMap.
ProbMap tensor_to_prob_map(const torch::Tensor& probs);
torch::Tensor prob_map_to_tensor(const ProbMap& map);

/// Per-pixel argmax of a (C, H, W) tensor.
SegMask argmax_mask(const torch::Tensor& scores);

}  // namespace leuda

#endif  // LEUDA_TENSOR_UTILS_HPP_
