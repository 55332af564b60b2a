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

#include "leuda/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace leuda {
namespace {

struct Field {
  std::string name;
  std::function<nlohmann::json(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const nlohmann::json&)> set;
};

template <typename Access>
Field plain(std::string name, Access access) {
  return {std::move(name),
          [access](const ExperimentConfig& c) {
            return nlohmann::json(access(const_cast<ExperimentConfig&>(c)));
          },
          [access](ExperimentConfig& c, const nlohmann::json& j) { j.get_to(access(c)); }};
}

template <typename Access, typename ToString, typename Parse>
Field named(std::string name, Access access, ToString to_str, Parse parse) {
  return {std::move(name),
          [access, to_str](const ExperimentConfig& c) {
            return nlohmann::json(std::string(to_str(access(const_cast<ExperimentConfig&>(c)))));
          },
          [access, parse](ExperimentConfig& c, const nlohmann::json& j) {
            access(c) = parse(j.get<std::string>());
          }};
}

std::string_view cadence_name(EmaCadence c) {
  return c == EmaCadence::kEpoch ? "epoch" : "iteration";
}
EmaCadence parse_cadence(std::string_view s) {
  if (s == "iteration") return EmaCadence::kIteration;
  if (s == "epoch") return EmaCadence::kEpoch;
  throw InvalidInput("unknown ema_per value '" + std::string(s) + "'");
}
std::string_view input_name(DiscriminatorInput d) {
  return d == DiscriminatorInput::kSelfInformation ? "self_information" : "probabilities";
}
DiscriminatorInput parse_input(std::string_view s) {
  if (s == "probabilities") return DiscriminatorInput::kProbabilities;
  if (s == "self_information") return DiscriminatorInput::kSelfInformation;
  throw InvalidInput("unknown discriminator_input value '" + std::string(s) + "'");
}

#define LEUDA_REF(expr) [](ExperimentConfig& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(plain("n_subjects", LEUDA_REF(phantom.n_subjects)));
    f.push_back(plain("slices_per_subject", LEUDA_REF(phantom.slices_per_subject)));
    f.push_back(plain("image_size", LEUDA_REF(phantom.image_size)));
    f.push_back(plain("canvas_margin", LEUDA_REF(phantom.canvas_margin)));
    f.push_back(plain("phantom_seed", LEUDA_REF(phantom.seed)));
    f.push_back(plain("min_intensity_gap", LEUDA_REF(phantom.min_intensity_gap)));
    f.push_back(plain("slice_spacing", LEUDA_REF(phantom.slice_spacing)));
    f.push_back(plain("target_gamma", LEUDA_REF(phantom.target_appearance.gamma)));
    f.push_back(plain("target_invert", LEUDA_REF(phantom.target_appearance.invert)));
    f.push_back(plain("dataset_dir", LEUDA_REF(dataset_dir)));
    f.push_back(named("direction", LEUDA_REF(direction),
                      [](Direction d) { return to_string(d); }, parse_direction));
    f.push_back(plain("train_fraction", LEUDA_REF(train_fraction)));
    f.push_back(plain("label_ratio", LEUDA_REF(label_ratio)));
    f.push_back(plain("seeds", LEUDA_REF(seeds)));
    f.push_back(plain("method", LEUDA_REF(method)));
    f.push_back(plain("ablation_methods", LEUDA_REF(ablation_methods)));

    f.push_back(plain("num_classes", LEUDA_REF(segmenter.num_classes)));
    f.push_back(plain("seg_depth", LEUDA_REF(segmenter.depth)));
    f.push_back(plain("seg_base_width", LEUDA_REF(segmenter.base_width)));
    f.push_back(plain("seg_group_norm", LEUDA_REF(segmenter.group_norm)));
    f.push_back(plain("disc_base_width", LEUDA_REF(discriminator.base_width)));

    f.push_back(plain("gen_base_width", LEUDA_REF(translation.generator.base_width)));
    f.push_back(plain("gen_num_downsample", LEUDA_REF(translation.generator.num_downsample)));
    f.push_back(plain("gen_res_blocks", LEUDA_REF(translation.generator.num_res_blocks)));
    f.push_back(plain("gen_residual_output", LEUDA_REF(translation.generator.residual_output)));
    f.push_back(plain("gen_identity_init", LEUDA_REF(translation.generator.identity_init)));
    f.push_back(plain("dcam_disc_base_width", LEUDA_REF(translation.discriminator.base_width)));
    f.push_back(plain("dcam_disc_layers", LEUDA_REF(translation.discriminator.num_layers)));
    f.push_back(plain("dcam_epochs", LEUDA_REF(translation.epochs)));
    f.push_back(plain("dcam_batch_size", LEUDA_REF(translation.batch_size)));
    f.push_back(plain("dcam_iterations_per_epoch", LEUDA_REF(translation.iterations_per_epoch)));
    f.push_back(plain("dcam_lr", LEUDA_REF(translation.lr)));
    f.push_back(plain("dcam_beta1", LEUDA_REF(translation.beta1)));
    f.push_back(plain("dcam_beta2", LEUDA_REF(translation.beta2)));
    f.push_back(plain("lambda_cycle", LEUDA_REF(translation.lambda_cycle)));
    f.push_back(plain("lambda_identity", LEUDA_REF(translation.lambda_identity)));
    f.push_back(named("dcam_gan_loss_variant", LEUDA_REF(translation.gan_loss_variant),
                      [](GanLossVariant v) { return to_string(v); }, parse_gan_loss_variant));

    f.push_back(plain("ema_alpha", LEUDA_REF(training.ema_alpha)));
    f.push_back(plain("t_max", LEUDA_REF(training.t_max)));
    f.push_back(plain("l_max", LEUDA_REF(training.l_max)));
    f.push_back(plain("layer_set", LEUDA_REF(training.layer_set)));
    f.push_back(plain("lambda_seg_per_level", LEUDA_REF(training.lambda_seg_per_level)));
    f.push_back(plain("lambda_adv_per_level", LEUDA_REF(training.lambda_adv_per_level)));
    f.push_back(plain("lr_peak", LEUDA_REF(training.lr_peak)));
    f.push_back(plain("disc_lr_scale", LEUDA_REF(training.disc_lr_scale)));
    f.push_back(plain("warmup_epochs", LEUDA_REF(training.warmup_epochs)));
    f.push_back(plain("adam_beta1", LEUDA_REF(training.adam_beta1)));
    f.push_back(plain("adam_beta2", LEUDA_REF(training.adam_beta2)));
    f.push_back(plain("batch_labeled", LEUDA_REF(training.batch_labeled)));
    f.push_back(plain("batch_unlabeled", LEUDA_REF(training.batch_unlabeled)));
    f.push_back(plain("iterations_per_epoch", LEUDA_REF(training.iterations_per_epoch)));
    f.push_back(plain("noise_sigma", LEUDA_REF(training.noise_sigma)));
    f.push_back(named("gan_loss_variant", LEUDA_REF(training.gan_loss_variant),
                      [](GanLossVariant v) { return to_string(v); }, parse_gan_loss_variant));
    f.push_back(named("ema_per", LEUDA_REF(training.ema_per), cadence_name, parse_cadence));
    f.push_back(named("discriminator_input", LEUDA_REF(training.discriminator_input),
                      input_name, parse_input));
    f.push_back(plain("labeled_cycle_source", LEUDA_REF(training.labeled_cycle_source)));
    f.push_back(plain("intra_include_cycle_source",
                      LEUDA_REF(training.intra_include_cycle_source)));
    f.push_back(plain("augment", LEUDA_REF(training.augment)));
    f.push_back(plain("aug_rotation_degrees", LEUDA_REF(training.augment_params.rotation_degrees)));
    f.push_back(plain("aug_scale_min", LEUDA_REF(training.augment_params.scale_min)));
    f.push_back(plain("aug_scale_max", LEUDA_REF(training.augment_params.scale_max)));
    f.push_back(plain("aug_shear_degrees", LEUDA_REF(training.augment_params.shear_degrees)));
    f.push_back({"pair_kinds",
                 [](const ExperimentConfig& c) {
                   nlohmann::json out = nlohmann::json::array();
                   for (auto k : c.training.pair_kinds) out.push_back(std::string(to_string(k)));
                   return out;
                 },
                 [](ExperimentConfig& c, const nlohmann::json& j) {
                   c.training.pair_kinds.clear();
                   for (const auto& s : j) {
                     c.training.pair_kinds.push_back(parse_pair_kind(s.get<std::string>()));
                   }
                 }});

    f.push_back(plain("threads", LEUDA_REF(threads)));
    f.push_back(plain("audit", LEUDA_REF(audit)));
    f.push_back(plain("checkpoint_every", LEUDA_REF(checkpoint_every)));
    f.push_back(plain("log_level", LEUDA_REF(log_level)));
    return f;
  }();
  return table;
}

#undef LEUDA_REF

std::string env_name(const std::string& key) {
  std::string out = "LEUDA_";
  for (char ch : key) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  return out;
}

}  // namespace

std::string_view to_string(Direction direction) {
  return direction == Direction::kAtoB ? "a2b" : "b2a";
}

Direction parse_direction(std::string_view text) {
  if (text == "a2b") return Direction::kAtoB;
  if (text == "b2a") return Direction::kBtoA;
  throw InvalidInput("unknown direction '" + std::string(text) + "' (expected a2b or b2a)");
}

void ExperimentConfig::validate() const {
  phantom.validate();
  segmenter.validate();
  discriminator.validate();
  translation.validate();
  training.validate();
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw InvalidInput("train_fraction must lie in (0, 1]");
  }
  if (!(label_ratio > 0.0 && label_ratio <= 1.0)) {
    throw InvalidInput("label_ratio must lie in (0, 1]");
  }
  if (seeds.empty()) throw InvalidInput("at least one seed is required");
  if (threads < 1) throw InvalidInput("threads must be >= 1");
  if (checkpoint_every < 0) throw InvalidInput("checkpoint_every must be >= 0");
  segmenter.check_input(phantom.image_size, phantom.image_size);
  if (training.layer_set.back() > segmenter.depth) {
    throw InvalidInput("layer_set exceeds the segmenter depth");
  }
}

nlohmann::json to_flat_json(const ExperimentConfig& config) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& f : fields()) out[f.name] = f.get(config);
  return out;
}

ExperimentConfig from_flat_json(const nlohmann::json& flat, const ExperimentConfig& base) {
  if (!flat.is_object()) throw InvalidInput("config must be a flat JSON object");
  ExperimentConfig config = base;
  for (const auto& [key, value] : flat.items()) {
    const auto it = std::find_if(fields().begin(), fields().end(),
                                 [&](const Field& f) { return f.name == key; });
    if (it == fields().end()) throw InvalidInput("unknown config key '" + key + "'");
    try {
      it->set(config, value);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput("config key '" + key + "': " + e.what());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read config " + path.string());
  nlohmann::json flat;
  try {
    flat = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("config " + path.string() + ": " + e.what());
  }
  return from_flat_json(flat);
}

std::vector<std::string> apply_env_overrides(ExperimentConfig& config, const EnvLookup& lookup) {
  const EnvLookup get = lookup ? lookup : [](const char* name) { return std::getenv(name); };
  std::vector<std::string> applied;
  for (const auto& f : fields()) {
    const char* raw = get(env_name(f.name).c_str());
    if (!raw) continue;
    const nlohmann::json current = f.get(config);
    nlohmann::json value;
    if (current.is_string()) {
      value = std::string(raw);
    } else {
      try {
        value = nlohmann::json::parse(raw);
      } catch (const nlohmann::json::parse_error&) {
        throw InvalidInput(env_name(f.name) + ": cannot parse '" + raw + "'");
      }
    }
    try {
      f.set(config, value);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput(env_name(f.name) + ": " + e.what());
    }
    applied.push_back(f.name);
  }
  return applied;
}

nlohmann::json config_overrides(const ExperimentConfig& config) {
  const auto defaults = to_flat_json(ExperimentConfig{});
  const auto current = to_flat_json(config);
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, value] : current.items()) {
    if (defaults.at(key) != value) out[key] = {{"default", defaults.at(key)}, {"value", value}};
  }
  return out;
}

std::string config_hash(const nlohmann::json& flat) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : flat.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

std::string config_hash(const ExperimentConfig& config) {
  return config_hash(to_flat_json(config));
}

}  // namespace leuda
