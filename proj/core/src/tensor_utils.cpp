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

#include "leuda/tensor_utils.hpp"

#include <algorithm>

namespace leuda {
namespace {

void check_same_size(int h, int w, int h0, int w0) {
  if (h != h0 || w != w0) throw InvalidInput("batch members differ in spatial size");
}

}  // namespace

torch::Tensor images_to_tensor(std::span<const ImageTensor* const> images) {
  if (images.empty()) throw InvalidInput("images_to_tensor: empty batch");
  const int h = images.front()->height();
  const int w = images.front()->width();
  auto out = torch::empty({static_cast<std::int64_t>(images.size()), 1, h, w},
                          torch::kFloat32);
  float* dst = out.data_ptr<float>();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t b = 0; b < images.size(); ++b) {
    check_same_size(images[b]->height(), images[b]->width(), h, w);
    std::copy_n(images[b]->pixels.values.data(), plane, dst + b * plane);
  }
  return out;
}

torch::Tensor images_to_tensor(std::span<const ImageTensor> images) {
  std::vector<const ImageTensor*> ptrs;
  for (const auto& image : images) ptrs.push_back(&image);
  return images_to_tensor(std::span<const ImageTensor* const>(ptrs));
}

torch::Tensor masks_to_tensor(std::span<const SegMask* const> masks) {
  if (masks.empty()) throw InvalidInput("masks_to_tensor: empty batch");
  const int h = masks.front()->height();
  const int w = masks.front()->width();
  auto out = torch::empty({static_cast<std::int64_t>(masks.size()), h, w}, torch::kInt64);
  std::int64_t* dst = out.data_ptr<std::int64_t>();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t b = 0; b < masks.size(); ++b) {
    check_same_size(masks[b]->height(), masks[b]->width(), h, w);
    std::copy_n(masks[b]->labels.values.data(), plane, dst + b * plane);
  }
  return out;
}

torch::Tensor masks_to_tensor(std::span<const SegMask> masks) {
  std::vector<const SegMask*> ptrs;
  for (const auto& mask : masks) ptrs.push_back(&mask);
  return masks_to_tensor(std::span<const SegMask* const>(ptrs));
}

ImageTensor tensor_to_image(const torch::Tensor& tensor, ImageKind kind,
                            std::string slice_id) {
  auto t = tensor.detach().to(torch::kCPU, torch::kFloat32).contiguous();
  if (t.dim() == 3 && t.size(0) == 1) t = t[0];
  if (t.dim() != 2) throw InvalidInput("tensor_to_image expects (1, H, W) or (H, W)");
  ImageTensor image;
  image.kind = kind;
  image.slice_id = std::move(slice_id);
  image.pixels = Grid2D<float>(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)));
  std::copy_n(t.data_ptr<float>(), image.pixels.size(), image.pixels.values.begin());
  return image;
}

ProbMap tensor_to_prob_map(const torch::Tensor& probs) {
  auto t = probs.detach().to(torch::kCPU, torch::kFloat32).contiguous();
  if (t.dim() != 3) throw InvalidInput("tensor_to_prob_map expects (C, H, W)");
  ProbMap map;
  map.classes = static_cast<int>(t.size(0));
  map.height = static_cast<int>(t.size(1));
  map.width = static_cast<int>(t.size(2));
  map.probs.assign(t.data_ptr<float>(), t.data_ptr<float>() + t.numel());
  return map;
}

torch::Tensor prob_map_to_tensor(const ProbMap& map) {
  return torch::from_blob(const_cast<float*>(map.probs.data()),
                          {map.classes, map.height, map.width}, torch::kFloat32)
      .clone();
}

SegMask argmax_mask(const torch::Tensor& scores) {
  if (scores.dim() != 3) throw InvalidInput("argmax_mask expects (C, H, W)");
  auto labels = scores.detach().argmax(0).to(torch::kCPU, torch::kUInt8).contiguous();
  SegMask mask{Grid2D<std::uint8_t>(static_cast<int>(labels.size(0)),
                                    static_cast<int>(labels.size(1)))};
  std::copy_n(labels.data_ptr<std::uint8_t>(), mask.labels.size(),
              mask.labels.values.begin());
  return mask;
}

}  // namespace leuda
