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

#include "leuda/networks.hpp"

#include <algorithm>
#include <string>

#include "leuda/tensor_utils.hpp"

namespace leuda {
namespace F = torch::nn::functional;
namespace {

int norm_groups(int channels) { return channels % 4 == 0 ? 4 : 1; }

torch::nn::Sequential conv_block(int in, int out, bool group_norm) {
  torch::nn::Sequential block;
  block->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(1)));
  if (group_norm) block->push_back(torch::nn::GroupNorm(norm_groups(out), out));
  block->push_back(torch::nn::ReLU());
  block->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(out, out, 3).padding(1)));
  if (group_norm) block->push_back(torch::nn::GroupNorm(norm_groups(out), out));
  block->push_back(torch::nn::ReLU());
  return block;
}

}  // namespace

void SegmenterConfig::validate() const {
  if (in_channels < 1 || depth < 1 || base_width < 1 || num_classes < 2) {
    throw InvalidInput("SegmenterConfig: non-positive size parameter");
  }
  if (aux_levels.empty() || aux_levels.front() != 1) {
    throw InvalidInput("SegmenterConfig: aux_levels must start with level 1");
  }
  if (!std::is_sorted(aux_levels.begin(), aux_levels.end()) ||
      std::adjacent_find(aux_levels.begin(), aux_levels.end()) != aux_levels.end()) {
    throw InvalidInput("SegmenterConfig: aux_levels must be strictly increasing");
  }
  if (aux_levels.back() > depth) {
    throw InvalidInput("SegmenterConfig: aux level " + std::to_string(aux_levels.back()) +
                       " exceeds decoder depth " + std::to_string(depth));
  }
}

void SegmenterConfig::check_input(std::int64_t height, std::int64_t width) const {
  const std::int64_t factor = std::int64_t{1} << depth;
  if (height <= 0 || width <= 0 || height % factor != 0 || width % factor != 0) {
    throw InvalidInput("segmenter input " + std::to_string(height) + "x" +
                       std::to_string(width) + " is not divisible by " +
                       std::to_string(factor));
  }
}

const LevelOutput& MultiLevelOutput::at_level(int level) const {
  for (const auto& out : levels) {
    if (out.level == level) return out;
  }
  throw InvalidInput("no output for level " + std::to_string(level));
}

MultiLevelOutput MultiLevelOutput::slice(std::int64_t begin, std::int64_t end) const {
  MultiLevelOutput out;
  for (const auto& l : levels) {
    out.levels.push_back({l.level, l.logits.slice(0, begin, end), l.probs.slice(0, begin, end)});
  }
  return out;
}

MultiLevelOutput MultiLevelOutput::detached() const {
  MultiLevelOutput out;
  for (const auto& l : levels) {
    out.levels.push_back({l.level, l.logits.detach(), l.probs.detach()});
  }
  return out;
}

SegmenterImpl::SegmenterImpl(SegmenterConfig config) : config_(std::move(config)) {
  config_.validate();
  const int w = config_.base_width;
  encoder_ = register_module("encoder", torch::nn::ModuleList());
  int in = config_.in_channels;
  for (int k = 0; k < config_.depth; ++k) {
    encoder_->push_back(conv_block(in, w << k, config_.group_norm));
    in = w << k;
  }
  bottleneck_ = register_module("bottleneck", conv_block(in, w << config_.depth,
                                                         config_.group_norm));
  upsamplers_ = register_module("upsamplers", torch::nn::ModuleList());
  decoder_ = register_module("decoder", torch::nn::ModuleList());
  for (int k = config_.depth - 1; k >= 0; --k) {
    const int from = w << (k + 1);
    const int to = w << k;
    upsamplers_->push_back(torch::nn::ConvTranspose2d(
        torch::nn::ConvTranspose2dOptions(from, to, 2).stride(2)));
    decoder_->push_back(conv_block(2 * to, to, config_.group_norm));
  }
  for (int level : config_.aux_levels) {
    const int channels = w << (level - 1);
    heads_.push_back(register_module(
        "head" + std::to_string(level),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, config_.num_classes, 1))));
  }
}

torch::nn::Conv2d& SegmenterImpl::head(int level) {
  for (std::size_t i = 0; i < config_.aux_levels.size(); ++i) {
    if (config_.aux_levels[i] == level) return heads_[i];
  }
  throw InvalidInput("no head for level " + std::to_string(level));
}

MultiLevelOutput SegmenterImpl::forward(const torch::Tensor& images) {
  if (images.dim() != 4 || images.size(1) != config_.in_channels) {
    throw InvalidInput("segmenter expects (B, " + std::to_string(config_.in_channels) +
                       ", H, W) input");
  }
  const std::int64_t h = images.size(2);
  const std::int64_t w = images.size(3);
  config_.check_input(h, w);

  std::vector<torch::Tensor> skips;
  torch::Tensor x = images;
  for (std::size_t k = 0; k < encoder_->size(); ++k) {
    x = encoder_[k]->as<torch::nn::Sequential>()->forward(x);
    skips.push_back(x);
    x = F::max_pool2d(x, F::MaxPool2dFuncOptions(2));
  }
  x = bottleneck_->forward(x);

  // Decoder block j sits at level depth - j.
  std::vector<torch::Tensor> block_out(config_.depth + 1);
  for (int j = 0; j < config_.depth; ++j) {
    x = upsamplers_[j]->as<torch::nn::ConvTranspose2d>()->forward(x);
    x = torch::cat({x, skips[config_.depth - 1 - j]}, 1);
    x = decoder_[j]->as<torch::nn::Sequential>()->forward(x);
    block_out[config_.depth - j] = x;
  }

  MultiLevelOutput out;
  for (std::size_t i = 0; i < config_.aux_levels.size(); ++i) {
    const int level = config_.aux_levels[i];
    torch::Tensor logits = heads_[i]->forward(block_out[level]);
    if (level > 1) {
      logits = F::interpolate(logits, F::InterpolateFuncOptions()
                                          .size(std::vector<std::int64_t>{h, w})
                                          .mode(torch::kBilinear)
                                          .align_corners(false));
    }
    out.levels.push_back({level, logits, torch::softmax(logits, 1)});
  }
  return out;
}

Segmenter build_segmenter(const SegmenterConfig& config) {
  config.validate();
  torch::manual_seed(config.seed);
  return Segmenter(config);
}

MultiLevelOutput forward_multi_level(Segmenter& segmenter, const torch::Tensor& images) {
  return segmenter->forward(images);
}

MultiLevelOutput forward_multi_level(Segmenter& segmenter, const ImageTensor& image) {
  image.validate();
  const ImageTensor* one[] = {&image};
  return segmenter->forward(images_to_tensor(one));
}

void DiscriminatorConfig::validate() const {
  if (in_channels < 1) throw InvalidInput("discriminator in_channels must be >= 1");
  if (base_width < 1 || num_layers < 2 || kernel_size < 1 || stride < 1 || padding < 0) {
    throw InvalidInput("DiscriminatorConfig: invalid layer geometry");
  }
}

std::vector<int> DiscriminatorConfig::channel_progression() const {
  std::vector<int> channels;
  for (int l = 0; l + 1 < num_layers; ++l) channels.push_back(base_width << l);
  channels.push_back(1);
  return channels;
}

std::int64_t DiscriminatorConfig::output_extent(std::int64_t size) const {
  for (int l = 0; l < num_layers; ++l) {
    size = (size + 2 * padding - kernel_size) / stride + 1;
  }
  return size;
}

DiscriminatorImpl::DiscriminatorImpl(DiscriminatorConfig config)
    : config_(std::move(config)) {
  config_.validate();
  int in = config_.in_channels;
  const auto channels = config_.channel_progression();
  for (std::size_t l = 0; l < channels.size(); ++l) {
    convs_.push_back(register_module(
        "conv" + std::to_string(l + 1),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(in, channels[l], config_.kernel_size)
                              .stride(config_.stride)
                              .padding(config_.padding))));
    in = channels[l];
  }
}

std::vector<torch::Tensor> DiscriminatorImpl::forward_layers(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != config_.in_channels) {
    throw InvalidInput("discriminator expects (B, " + std::to_string(config_.in_channels) +
                       ", H, W) input");
  }
  const std::int64_t min_side = std::int64_t{1} << config_.num_layers;
  if (x.size(2) < min_side || x.size(3) < min_side) {
    throw InvalidInput("discriminator input smaller than " + std::to_string(min_side) +
                       " pixels");
  }
  std::vector<torch::Tensor> outs;
  torch::Tensor h = x;
  for (std::size_t l = 0; l < convs_.size(); ++l) {
    h = convs_[l]->forward(h);
    if (l + 1 < convs_.size()) h = F::leaky_relu(h, F::LeakyReLUFuncOptions().negative_slope(config_.negative_slope));
    outs.push_back(h);
  }
  return outs;
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& x) {
  return forward_layers(x).back();
}

Discriminator build_discriminator(const DiscriminatorConfig& config) {
  config.validate();
  torch::manual_seed(config.seed);
  return Discriminator(config);
}

Discriminator build_discriminator(int in_channels) {
  DiscriminatorConfig config;
  config.in_channels = in_channels;
  return build_discriminator(config);
}

std::int64_t parameter_count(const torch::nn::Module& module) {
  std::int64_t count = 0;
  for (const auto& p : module.parameters()) count += p.numel();
  return count;
}

namespace {
nlohmann::json module_listing(const torch::nn::Module& module) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& item : module.named_parameters()) {
    params.push_back({{"name", item.key()}, {"shape", item.value().sizes().vec()}});
  }
  return params;
}
}  // namespace

nlohmann::json describe(Segmenter& segmenter, std::int64_t height, std::int64_t width) {
  const auto& cfg = segmenter->config();
  cfg.check_input(height, width);
  torch::NoGradGuard no_grad;
  const auto out = segmenter->forward(torch::zeros({1, cfg.in_channels, height, width}));
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& l : out.levels) {
    outputs.push_back({{"level", l.level}, {"shape", l.probs.sizes().vec()}});
  }
  return {{"type", "unet_segmenter"},
          {"depth", cfg.depth},
          {"base_width", cfg.base_width},
          {"num_classes", cfg.num_classes},
          {"aux_levels", cfg.aux_levels},
          {"group_norm", cfg.group_norm},
          {"parameter_count", parameter_count(*segmenter)},
          {"parameters", module_listing(*segmenter)},
          {"outputs", outputs}};
}

nlohmann::json describe(Discriminator& discriminator, std::int64_t height,
                        std::int64_t width) {
  const auto& cfg = discriminator->config();
  torch::NoGradGuard no_grad;
  const auto outs =
      discriminator->forward_layers(torch::zeros({1, cfg.in_channels, height, width}));
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < outs.size(); ++l) {
    layers.push_back({{"layer", l + 1},
                      {"kernel", cfg.kernel_size},
                      {"stride", cfg.stride},
                      {"padding", cfg.padding},
                      {"leaky_relu", l + 1 < outs.size() ? nlohmann::json(cfg.negative_slope)
                                                         : nlohmann::json()},
                      {"output_shape", outs[l].sizes().vec()}});
  }
  return {{"type", "fcn_discriminator"},
          {"parameter_count", parameter_count(*discriminator)},
          {"layers", layers}};
}

void copy_state(const torch::nn::Module& from, torch::nn::Module& to) {
  torch::NoGradGuard no_grad;
  auto src = from.named_parameters();
  auto dst = to.named_parameters();
  for (auto& item : dst) item.value().copy_(src[item.key()]);
  auto src_buf = from.named_buffers();
  auto dst_buf = to.named_buffers();
  for (auto& item : dst_buf) item.value().copy_(src_buf[item.key()]);
}

}  // namespace leuda
