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

#include "leuda/translation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "leuda/dataset.hpp"
#include "leuda/dataset_io.hpp"
#include "leuda/losses.hpp"
#include "leuda/tensor_utils.hpp"

namespace leuda {
namespace F = torch::nn::functional;
namespace {

void add_conv_in_relu(torch::nn::Sequential& s, int in, int out, int kernel, int stride) {
  s->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, kernel)
                                     .stride(stride)
                                     .padding(kernel / 2)
                                     .padding_mode(torch::kReflect)));
  s->push_back(torch::nn::InstanceNorm2d(torch::nn::InstanceNorm2dOptions(out).affine(true)));
  s->push_back(torch::nn::ReLU());
}

struct ResBlockImpl : torch::nn::Module {
  explicit ResBlockImpl(int channels) {
    conv1 = register_module("conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels, 3)
                                                          .padding(1)
                                                          .padding_mode(torch::kReflect)));
    norm1 = register_module("norm1", torch::nn::InstanceNorm2d(
                                         torch::nn::InstanceNorm2dOptions(channels).affine(true)));
    conv2 = register_module("conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels, 3)
                                                          .padding(1)
                                                          .padding_mode(torch::kReflect)));
    norm2 = register_module("norm2", torch::nn::InstanceNorm2d(
                                         torch::nn::InstanceNorm2dOptions(channels).affine(true)));
  }
  torch::Tensor forward(const torch::Tensor& x) {
    auto h = torch::relu(norm1(conv1(x)));
    return x + norm2(conv2(h));
  }
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  torch::nn::InstanceNorm2d norm1{nullptr}, norm2{nullptr};
};
TORCH_MODULE(ResBlock);

struct UpsampleImpl : torch::nn::Module {
  torch::Tensor forward(const torch::Tensor& x) {
    return F::interpolate(x, F::InterpolateFuncOptions()
                                 .scale_factor(std::vector<double>{2.0, 2.0})
                                 .mode(torch::kBilinear)
                                 .align_corners(false));
  }
};
TORCH_MODULE(Upsample);

std::vector<torch::Tensor> module_state(torch::nn::Module& m) {
  std::vector<torch::Tensor> state;
  for (auto& p : m.parameters()) state.push_back(p.detach().clone());
  for (auto& b : m.buffers()) state.push_back(b.detach().clone());
  return state;
}

void restore_state(torch::nn::Module& m, const std::vector<torch::Tensor>& state) {
  torch::NoGradGuard no_grad;
  std::size_t i = 0;
  for (auto& p : m.parameters()) p.copy_(state[i++]);
  for (auto& b : m.buffers()) b.copy_(state[i++]);
}

torch::Tensor discriminator_view(Discriminator& d, const torch::Tensor& x,
                                 GanLossVariant variant) {
  auto scores = d->forward(x);
  return variant == GanLossVariant::kLog ? torch::sigmoid(scores) : scores;
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void GeneratorConfig::validate() const {
  if (in_channels < 1 || base_width < 1 || num_downsample < 0 || num_res_blocks < 0) {
    throw InvalidInput("GeneratorConfig: invalid size parameter");
  }
  if (identity_init && !residual_output) {
    throw InvalidInput("GeneratorConfig: identity_init requires residual_output");
  }
}

ResidualGeneratorImpl::ResidualGeneratorImpl(GeneratorConfig config)
    : config_(std::move(config)) {
  config_.validate();
  body_ = torch::nn::Sequential();
  int width = config_.base_width;
  add_conv_in_relu(body_, config_.in_channels, width, 7, 1);
  for (int k = 0; k < config_.num_downsample; ++k) {
    add_conv_in_relu(body_, width, width * 2, 3, 2);
    width *= 2;
  }
  for (int k = 0; k < config_.num_res_blocks; ++k) body_->push_back(ResBlock(width));
  for (int k = 0; k < config_.num_downsample; ++k) {
    body_->push_back(Upsample());
    add_conv_in_relu(body_, width, width / 2, 3, 1);
    width /= 2;
  }
  register_module("body", body_);
  out_ = register_module(
      "out", torch::nn::Conv2d(torch::nn::Conv2dOptions(width, config_.in_channels, 7)
                                   .padding(3)
                                   .padding_mode(torch::kReflect)));
  if (config_.identity_init) {
    torch::NoGradGuard no_grad;
    out_->weight.zero_();
    out_->bias.zero_();
  }
}

torch::Tensor ResidualGeneratorImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != config_.in_channels) {
    throw InvalidInput("generator expects (B, " + std::to_string(config_.in_channels) +
                       ", H, W) input");
  }
  const std::int64_t factor = std::int64_t{1} << config_.num_downsample;
  if (x.size(2) % factor != 0 || x.size(3) % factor != 0) {
    throw InvalidInput("generator input not divisible by " + std::to_string(factor));
  }
  auto y = out_(body_->forward(x));
  return config_.residual_output ? x + y : y;
}

void TranslationConfig::validate() const {
  generator.validate();
  discriminator.validate();
  if (epochs < 1 || batch_size < 1 || iterations_per_epoch < 0) {
    throw InvalidInput("TranslationConfig: invalid schedule");
  }
  if (lr <= 0.0 || lambda_cycle < 0.0 || lambda_identity < 0.0) {
    throw InvalidInput("TranslationConfig: invalid optimizer or loss weight");
  }
}

nlohmann::json to_json(const TranslationConfig& c) {
  return {{"generator",
           {{"base_width", c.generator.base_width},
            {"num_downsample", c.generator.num_downsample},
            {"num_res_blocks", c.generator.num_res_blocks},
            {"residual_output", c.generator.residual_output},
            {"identity_init", c.generator.identity_init}}},
          {"discriminator",
           {{"base_width", c.discriminator.base_width},
            {"num_layers", c.discriminator.num_layers}}},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"iterations_per_epoch", c.iterations_per_epoch},
          {"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"lambda_cycle", c.lambda_cycle},
          {"lambda_identity", c.lambda_identity},
          {"gan_loss_variant", to_string(c.gan_loss_variant)},
          {"seed", c.seed}};
}

nlohmann::json to_json(const DcamEpochLog& l) {
  return {{"epoch", l.epoch},       {"gan_s", l.gan_s},   {"gan_t", l.gan_t},
          {"d_s", l.d_s},           {"d_t", l.d_t},       {"cyc", l.cyc},
          {"cyc_source", l.cyc_source}, {"cyc_target", l.cyc_target},
          {"clamped_steps", l.clamped_steps}};
}

TranslatorPair build_translators(const TranslationConfig& config) {
  config.validate();
  TranslatorPair pair;
  pair.config = config;
  torch::manual_seed(derive_seed(config.seed, 1));
  pair.g_s = ResidualGenerator(config.generator);
  torch::manual_seed(derive_seed(config.seed, 2));
  pair.g_t = ResidualGenerator(config.generator);
  torch::manual_seed(derive_seed(config.seed, 3));
  pair.d_s = Discriminator(config.discriminator);
  torch::manual_seed(derive_seed(config.seed, 4));
  pair.d_t = Discriminator(config.discriminator);
  return pair;
}

DcamResult train_dcam(std::span<const ImageTensor> source_images,
                      std::span<const ImageTensor> target_images,
                      const TranslationConfig& config, const DcamEpochCallback& on_epoch,
                      const std::optional<std::filesystem::path>& divergence_checkpoint) {
  config.validate();
  if (source_images.empty() || target_images.empty()) {
    throw InvalidInput("train_dcam needs source and target images");
  }
  DcamResult result;
  result.translators = build_translators(config);
  auto& tp = result.translators;

  const auto xs_all = images_to_tensor(source_images);
  const auto xt_all = images_to_tensor(target_images);
  const std::int64_t n_s = xs_all.size(0);
  const std::int64_t n_t = xt_all.size(0);
  const int iterations =
      config.iterations_per_epoch > 0
          ? config.iterations_per_epoch
          : static_cast<int>((std::max(n_s, n_t) + config.batch_size - 1) / config.batch_size);

  std::vector<torch::Tensor> g_params = tp.g_s->parameters();
  for (auto& p : tp.g_t->parameters()) g_params.push_back(p);
  std::vector<torch::Tensor> d_params = tp.d_s->parameters();
  for (auto& p : tp.d_t->parameters()) d_params.push_back(p);
  const auto adam = torch::optim::AdamOptions(config.lr).betas({config.beta1, config.beta2});
  torch::optim::Adam opt_g(g_params, adam);
  torch::optim::Adam opt_d(d_params, adam);

  std::mt19937_64 rng(mix_seed(derive_seed(config.seed, 100)));
  std::vector<std::int64_t> order_s(n_s), order_t(n_t);
  std::iota(order_s.begin(), order_s.end(), 0);
  std::iota(order_t.begin(), order_t.end(), 0);
  std::size_t cursor_s = order_s.size(), cursor_t = order_t.size();
  auto draw = [&](std::vector<std::int64_t>& order, std::size_t& cursor) {
    std::vector<std::int64_t> idx;
    for (int b = 0; b < config.batch_size; ++b) {
      if (cursor >= order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      idx.push_back(order[cursor++]);
    }
    return torch::tensor(idx, torch::kInt64);
  };

  auto snapshot = [&] {
    std::vector<std::vector<torch::Tensor>> s;
    s.push_back(module_state(*tp.g_s));
    s.push_back(module_state(*tp.g_t));
    s.push_back(module_state(*tp.d_s));
    s.push_back(module_state(*tp.d_t));
    return s;
  };
  auto last_finite = snapshot();
  const auto variant = config.gan_loss_variant;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    DcamEpochLog log;
    log.epoch = epoch;
    bool diverged = false;
    for (int it = 0; it < iterations && !diverged; ++it) {
      const auto xs = xs_all.index_select(0, draw(order_s, cursor_s));
      const auto xt = xt_all.index_select(0, draw(order_t, cursor_t));

      const auto fake_t = tp.g_t->forward(xs);
      const auto rec_s = tp.g_s->forward(fake_t);
      const auto fake_s = tp.g_s->forward(xt);
      const auto rec_t = tp.g_t->forward(fake_s);

      const auto gan_t = gan_g_loss(discriminator_view(tp.d_t, fake_t, variant), variant);
      const auto gan_s = gan_g_loss(discriminator_view(tp.d_s, fake_s, variant), variant);
      const auto cyc_s = cycle_loss(xs, rec_s);
      const auto cyc_t = cycle_loss(xt, rec_t);
      auto g_total = gan_s + gan_t + config.lambda_cycle * (cyc_s + cyc_t);
      if (config.lambda_identity > 0.0) {
        g_total = g_total + config.lambda_identity * (cycle_loss(xs, tp.g_s->forward(xs)) +
                                                      cycle_loss(xt, tp.g_t->forward(xt)));
      }
      opt_g.zero_grad();
      g_total.backward();
      opt_g.step();

      opt_d.zero_grad();
      const auto real_t = discriminator_view(tp.d_t, xt, variant);
      const auto fake_t_score = discriminator_view(tp.d_t, fake_t.detach(), variant);
      const auto real_s = discriminator_view(tp.d_s, xs, variant);
      const auto fake_s_score = discriminator_view(tp.d_s, fake_s.detach(), variant);
      const auto losses_t = translation_gan_losses(real_t, fake_t_score, variant);
      const auto losses_s = translation_gan_losses(real_s, fake_s_score, variant);
      const auto d_total = 0.5 * (losses_t.d_loss + losses_s.d_loss);
      d_total.backward();
      opt_d.step();

      const double values[] = {gan_s.item<double>(),         gan_t.item<double>(),
                               losses_s.d_loss.item<double>(), losses_t.d_loss.item<double>(),
                               cyc_s.item<double>(),          cyc_t.item<double>()};
      if (!std::all_of(std::begin(values), std::end(values), finite)) {
        diverged = true;
        break;
      }
      log.gan_s += values[0];
      log.gan_t += values[1];
      log.d_s += values[2];
      log.d_t += values[3];
      log.cyc_source += values[4];
      log.cyc_target += values[5];
      if (losses_s.clamped || losses_t.clamped) ++log.clamped_steps;
    }
    if (diverged) {
      restore_state(*tp.g_s, last_finite[0]);
      restore_state(*tp.g_t, last_finite[1]);
      restore_state(*tp.d_s, last_finite[2]);
      restore_state(*tp.d_t, last_finite[3]);
      if (divergence_checkpoint) save_translators(*divergence_checkpoint, tp, "diverged");
      throw TrainingDiverged("translation training produced a non-finite loss in epoch " +
                             std::to_string(epoch));
    }
    for (double* v : {&log.gan_s, &log.gan_t, &log.d_s, &log.d_t, &log.cyc_source,
                      &log.cyc_target}) {
      *v /= iterations;
    }
    log.cyc = log.cyc_source + log.cyc_target;
    last_finite = snapshot();
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

namespace {

std::vector<ImageTensor> gather_slices(std::span<const Subject> subjects,
                                       std::span<const std::string> ids) {
  const auto index = index_subjects(subjects);
  std::vector<ImageTensor> out;
  for (const auto& id : ids) {
    const auto* s = index.at(id);
    out.insert(out.end(), s->slices.begin(), s->slices.end());
  }
  return out;
}

std::vector<Subject> gather_subjects(std::span<const Subject> subjects,
                                     std::span<const std::string> ids) {
  const auto index = index_subjects(subjects);
  std::vector<Subject> out;
  for (const auto& id : ids) out.push_back(*index.at(id));
  return out;
}

std::vector<std::string> source_train_ids(const DatasetSplit& split) {
  std::vector<std::string> ids = split.labeled_source;
  ids.insert(ids.end(), split.unlabeled_source.begin(), split.unlabeled_source.end());
  return ids;
}

}  // namespace

DcamResult train_dcam(const DatasetSplit& split, std::span<const Subject> subjects,
                      const TranslationConfig& config, const DcamEpochCallback& on_epoch,
                      const std::optional<std::filesystem::path>& divergence_checkpoint) {
  const auto source_ids = source_train_ids(split);
  const auto source = gather_slices(subjects, source_ids);
  const auto target = gather_slices(subjects, split.target);
  return train_dcam(source, target, config, on_epoch, divergence_checkpoint);
}

std::vector<ImageTensor> translate(ResidualGenerator& generator,
                                   std::span<const ImageTensor> images, ImageKind kind,
                                   int batch_size) {
  torch::NoGradGuard no_grad;
  const bool was_training = generator->is_training();
  generator->eval();
  std::vector<ImageTensor> out;
  out.reserve(images.size());
  for (std::size_t begin = 0; begin < images.size(); begin += batch_size) {
    const std::size_t end = std::min(images.size(), begin + batch_size);
    const auto y = generator->forward(images_to_tensor(images.subspan(begin, end - begin)));
    for (std::size_t i = begin; i < end; ++i) {
      out.push_back(tensor_to_image(y[static_cast<std::int64_t>(i - begin)], kind,
                                    images[i].slice_id));
    }
  }
  generator->train(was_training);
  return out;
}

std::vector<ImageTensor> translate_all(TranslatorPair& translators,
                                       std::span<const ImageTensor> source_images,
                                       std::span<const ImageTensor> target_images) {
  if (!translators.valid()) throw InvalidInput("translate_all: missing translators");
  std::vector<ImageTensor> out;
  if (!source_images.empty()) {
    auto s2t = translate(translators.g_t, source_images, ImageKind::kS2T);
    auto s2t2s = translate(translators.g_s, s2t, ImageKind::kS2T2S);
    out.insert(out.end(), s2t.begin(), s2t.end());
    out.insert(out.end(), s2t2s.begin(), s2t2s.end());
  }
  if (!target_images.empty()) {
    auto t2s = translate(translators.g_s, target_images, ImageKind::kT2S);
    auto t2s2t = translate(translators.g_t, t2s, ImageKind::kT2S2T);
    out.insert(out.end(), t2s.begin(), t2s.end());
    out.insert(out.end(), t2s2t.begin(), t2s2t.end());
  }
  return out;
}

SyntheticDomains synthesize_domains(TranslatorPair& translators, const DatasetSplit& split,
                                    std::span<const Subject> subjects,
                                    std::vector<ImageTensor>* translated) {
  const auto source_subjects = gather_subjects(subjects, source_train_ids(split));
  const auto target_subjects = gather_subjects(subjects, split.target);
  const auto all = translate_all(translators, flatten_slices(source_subjects),
                                 flatten_slices(target_subjects));
  auto domains = assemble_synthetic_domains(source_subjects, target_subjects, all,
                                            split.labeled_source);
  if (translated) *translated = all;
  return domains;
}

namespace {
const std::pair<const char*, int> kTranslatorParts[] = {
    {"g_s", 0}, {"g_t", 1}, {"d_s", 2}, {"d_t", 3}};

torch::nn::Module& translator_part(TranslatorPair& tp, int k) {
  switch (k) {
    case 0: return *tp.g_s;
    case 1: return *tp.g_t;
    case 2: return *tp.d_s;
    default: return *tp.d_t;
  }
}
}  // namespace

void save_translators(const std::filesystem::path& path, TranslatorPair& translators,
                      const std::string& config_hash) {
  if (!translators.valid()) throw InvalidInput("save_translators: missing translators");
  torch::serialize::OutputArchive archive;
  archive.write("config_hash", c10::IValue(config_hash));
  for (const auto& [name, k] : kTranslatorParts) {
    torch::serialize::OutputArchive sub;
    translator_part(translators, k).save(sub);
    archive.write(name, sub);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  archive.save_to(path.string());
}

void load_translators(const std::filesystem::path& path, TranslatorPair& translators,
                      const std::string& expected_hash) {
  if (!translators.valid()) throw InvalidInput("load_translators: build translators first");
  if (!std::filesystem::exists(path)) {
    throw InvalidInput("no translator checkpoint at " + path.string() + "; run stage1 first");
  }
  torch::serialize::InputArchive archive;
  archive.load_from(path.string());
  c10::IValue hash;
  archive.read("config_hash", hash);
  if (!expected_hash.empty() && hash.toStringRef() != expected_hash) {
    throw InvalidInput("translator checkpoint " + path.string() + " has config hash " +
                       hash.toStringRef() + ", expected " + expected_hash);
  }
  for (const auto& [name, k] : kTranslatorParts) {
    torch::serialize::InputArchive sub;
    archive.read(name, sub);
    translator_part(translators, k).load(sub);
  }
}

}  // namespace leuda
