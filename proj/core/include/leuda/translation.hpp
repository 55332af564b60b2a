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

// Bidirectional unpaired translation between the two modalities and
// materialization of the synthetic source-like and target-like domains.

#ifndef LEUDA_TRANSLATION_HPP_
#define LEUDA_TRANSLATION_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "leuda/networks.hpp"
#include "leuda/types.hpp"

namespace leuda {

struct GeneratorConfig {
  int in_channels = 1;
  int base_width = 16;
  /// Stride-2 convolutions in the encoder; width doubles at each.
  int num_downsample = 2;
  int num_res_blocks = 3;
  /// Output is x + f(x) instead of f(x).
  bool residual_output = false;
  /// Zero the output convolution so that a residual generator starts as the
  /// identity map. Requires residual_output.
  bool identity_init = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Encoder / residual blocks / bilinear-upsampling decoder with instance
/// normalization. Maps (B, 1, H, W) to (B, 1, H, W).
class ResidualGeneratorImpl : public torch::nn::Module {
 public:
  explicit ResidualGeneratorImpl(GeneratorConfig config);
  torch::Tensor forward(const torch::Tensor& x);
  const GeneratorConfig& config() const { return config_; }

 private:
  GeneratorConfig config_;
  torch::nn::Sequential body_{nullptr};
  torch::nn::Conv2d out_{nullptr};
};
TORCH_MODULE(ResidualGenerator);

struct TranslationConfig {
  GeneratorConfig generator;
  /// Patch discriminators D_s, D_t on single-channel images.
  DiscriminatorConfig discriminator{.in_channels = 1, .base_width = 16, .num_layers = 4};
  int epochs = 40;
  int batch_size = 1;
  /// Zero selects ceil(max(n_source, n_target) / batch_size).
  int iterations_per_epoch = 0;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double lambda_cycle = 10.0;
  /// Identity-mapping term weight; zero disables it.
  double lambda_identity = 0.0;
  GanLossVariant gan_loss_variant = GanLossVariant::kLeastSquares;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const TranslationConfig& config);

/// G_s maps target to source style, G_t maps source to target style.
struct TranslatorPair {
  ResidualGenerator g_s{nullptr};
  ResidualGenerator g_t{nullptr};
  Discriminator d_s{nullptr};
  Discriminator d_t{nullptr};
  TranslationConfig config;

  bool valid() const { return !g_s.is_empty() && !g_t.is_empty(); }
};

TranslatorPair build_translators(const TranslationConfig& config);

struct DcamEpochLog {
  int epoch = 0;
  /// Generator adversarial losses against D_s and D_t.
  double gan_s = 0.0;
  double gan_t = 0.0;
  double d_s = 0.0;
  double d_t = 0.0;
  /// Source-cycle plus target-cycle L1.
  double cyc = 0.0;
  double cyc_source = 0.0;
  double cyc_target = 0.0;
  int clamped_steps = 0;
};

nlohmann::json to_json(const DcamEpochLog& log);

struct DcamResult {
  TranslatorPair translators;
  std::vector<DcamEpochLog> log;
};

using DcamEpochCallback = std::function<void(const DcamEpochLog&)>;

/// Jointly trains both generators and both discriminators on unpaired
/// source and target images; no labels are used. On a non-finite loss the
/// translators are restored to the last finite end-of-epoch state, saved to
/// `divergence_checkpoint` when given, and TrainingDiverged is thrown.
DcamResult train_dcam(std::span<const ImageTensor> source_images,
                      std::span<const ImageTensor> target_images,
                      const TranslationConfig& config,
                      const DcamEpochCallback& on_epoch = {},
                      const std::optional<std::filesystem::path>& divergence_checkpoint = {});

/// Trains on every training slice of the split (labeled and unlabeled source,
/// target train).
DcamResult train_dcam(const DatasetSplit& split, std::span<const Subject> subjects,
                      const TranslationConfig& config,
                      const DcamEpochCallback& on_epoch = {},
                      const std::optional<std::filesystem::path>& divergence_checkpoint = {});

/// Applies a generator in inference mode; output images take `kind` and keep
/// their slice ids.
std::vector<ImageTensor> translate(ResidualGenerator& generator,
                                   std::span<const ImageTensor> images, ImageKind kind,
                                   int batch_size = 32);

/// S2T and S2T2S for every source slice, T2S and T2S2T for every target slice.
std::vector<ImageTensor> translate_all(TranslatorPair& translators,
                                       std::span<const ImageTensor> source_images,
                                       std::span<const ImageTensor> target_images);

/// Translates the split's training subjects and assembles the synthetic
/// domains and pairs; labels y^s attach to labeled source subjects only.
SyntheticDomains synthesize_domains(TranslatorPair& translators, const DatasetSplit& split,
                                    std::span<const Subject> subjects,
                                    std::vector<ImageTensor>* translated = nullptr);

/// Writes translator parameters with an embedded config hash.
void save_translators(const std::filesystem::path& path, TranslatorPair& translators,
                      const std::string& config_hash);
/// Restores parameters; throws InvalidInput when the stored hash differs from
/// a non-empty `expected_hash`.
void load_translators(const std::filesystem::path& path, TranslatorPair& translators,
                      const std::string& expected_hash = "");

}  // namespace leuda

#endif  // LEUDA_TRANSLATION_HPP_
