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

#include "leuda/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace leuda {
namespace {

void check_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (!a.sizes().equals(b.sizes())) {
    throw InvalidInput(std::string(what) + ": shape mismatch");
  }
}

void check_labels(const torch::Tensor& labels, std::int64_t num_classes) {
  if (labels.numel() == 0) return;
  const auto lo = labels.min().item<std::int64_t>();
  const auto hi = labels.max().item<std::int64_t>();
  if (lo < 0 || hi >= num_classes) {
    throw InvalidInput("label " + std::to_string(lo < 0 ? lo : hi) + " outside [0, " +
                       std::to_string(num_classes) + ")");
  }
}

void check_not_nan(const torch::Tensor& t, const char* what) {
  if (t.isnan().any().item<bool>()) {
    throw TrainingDiverged(std::string(what) + ": NaN discriminator score");
  }
}

double value_of(const torch::Tensor& t) {
  return t.defined() ? t.detach().to(torch::kFloat64).item<double>() : 0.0;
}

}  // namespace

LossWeights LossWeights::from_array(const std::array<double, 4>& values) {
  return {values[0], values[1], values[2], values[3]};
}

double LossBreakdown::additivity_residual() const {
  const double sum = seg + weights.con_intra * con_intra + weights.adv_intra * adv_intra +
                     weights.con_inter * con_inter + weights.adv_inter * adv_inter;
  return std::abs(total - sum);
}

nlohmann::json to_json(const LossWeights& w) {
  return {{"con_intra", w.con_intra},
          {"adv_intra", w.adv_intra},
          {"con_inter", w.con_inter},
          {"adv_inter", w.adv_inter}};
}

nlohmann::json to_json(const LossBreakdown& b) {
  return {{"seg", b.seg},         {"con_intra", b.con_intra}, {"adv_intra", b.adv_intra},
          {"con_inter", b.con_inter}, {"adv_inter", b.adv_inter}, {"total", b.total},
          {"weights", to_json(b.weights)}};
}

torch::Tensor pixel_cross_entropy(const torch::Tensor& logits, const torch::Tensor& labels) {
  if (logits.dim() != 4 || labels.dim() != 3) {
    throw InvalidInput("cross_entropy_loss expects (B, C, H, W) logits and (B, H, W) labels");
  }
  check_labels(labels, logits.size(1));
  const auto log_p = torch::log_softmax(logits, 1);
  return -log_p.gather(1, labels.unsqueeze(1)).mean();
}

torch::Tensor dice_loss(const torch::Tensor& probs, const torch::Tensor& labels, double eps) {
  if (probs.dim() != 4 || labels.dim() != 3) {
    throw InvalidInput("dice_loss expects (B, C, H, W) probabilities and (B, H, W) labels");
  }
  const std::int64_t classes = probs.size(1);
  if (classes < 2) throw InvalidInput("dice_loss needs at least one foreground class");
  check_labels(labels, classes);
  const auto onehot =
      torch::one_hot(labels, classes).permute({0, 3, 1, 2}).to(probs.scalar_type());
  const std::vector<std::int64_t> dims{0, 2, 3};
  const auto inter = (probs * onehot).sum(dims);
  const auto denom = probs.sum(dims) + onehot.sum(dims) + eps;
  const auto per_class = 1.0 - 2.0 * inter / denom;
  return per_class.slice(0, 1).mean();
}

torch::Tensor segmentation_loss(const LevelOutput& output, const torch::Tensor& labels) {
  return pixel_cross_entropy(output.logits, labels) + dice_loss(output.probs, labels);
}

torch::Tensor supervised_seg_loss(const MultiLevelOutput& outputs, const torch::Tensor& labels,
                                  std::span<const int> levels,
                                  std::span<const double> lambda_seg) {
  if (levels.size() != lambda_seg.size()) {
    throw InvalidInput("supervised_seg_loss: one weight per level required");
  }
  torch::Tensor total;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    auto term = lambda_seg[k] * segmentation_loss(outputs.at_level(levels[k]), labels);
    total = total.defined() ? total + term : term;
  }
  if (!total.defined()) throw InvalidInput("supervised_seg_loss: no levels");
  return total;
}

torch::Tensor intra_consistency(const torch::Tensor& student, const torch::Tensor& teacher) {
  check_same_shape(student, teacher, "intra_consistency");
  return (student - teacher).pow(2).mean();
}

torch::Tensor self_information(const torch::Tensor& probs) {
  return -probs * torch::log2(probs.clamp_min(kProbFloor));
}

ProbMap self_information(const ProbMap& probs) {
  ProbMap out = probs;
  for (auto& v : out.probs) v = v > 0.0f ? -v * std::log2(v) : 0.0f;
  return out;
}

torch::Tensor inter_consistency(const torch::Tensor& student, const torch::Tensor& teacher) {
  check_same_shape(student, teacher, "inter_consistency");
  if (student.dim() != 4) throw InvalidInput("inter_consistency expects (B, C, H, W)");
  const auto diff = self_information(student) - self_information(teacher);
  return diff.pow(2).sum(1).mean();
}

torch::Tensor ensemble_adv_d_loss(const torch::Tensor& d_on_student,
                                  const torch::Tensor& d_on_teacher, GanLossVariant variant) {
  check_not_nan(d_on_student, "ensemble_adv_d_loss");
  check_not_nan(d_on_teacher, "ensemble_adv_d_loss");
  if (variant == GanLossVariant::kLog) {
    return -torch::log_sigmoid(d_on_teacher).mean() - torch::log_sigmoid(-d_on_student).mean();
  }
  return (d_on_teacher - 1.0).pow(2).mean() + d_on_student.pow(2).mean();
}

torch::Tensor ensemble_adv_g_loss(const torch::Tensor& d_on_student, GanLossVariant variant) {
  check_not_nan(d_on_student, "ensemble_adv_g_loss");
  if (variant == GanLossVariant::kLog) return -torch::log_sigmoid(d_on_student).mean();
  return (d_on_student - 1.0).pow(2).mean();
}

AdversarialLosses ensemble_adv_losses(const torch::Tensor& d_on_student,
                                      const torch::Tensor& d_on_teacher,
                                      GanLossVariant variant) {
  return {ensemble_adv_d_loss(d_on_student, d_on_teacher, variant),
          ensemble_adv_g_loss(d_on_student, variant)};
}

torch::Tensor multi_level_adv(std::span<const torch::Tensor> per_level_losses,
                              std::span<const double> lambda_adv) {
  if (per_level_losses.size() != lambda_adv.size()) {
    throw InvalidInput("multi_level_adv: one loss per configured level required");
  }
  torch::Tensor total = torch::zeros({});
  for (std::size_t k = 0; k < lambda_adv.size(); ++k) {
    total = total + lambda_adv[k] * per_level_losses[k];
  }
  return total;
}

double multi_level_adv(std::span<const double> per_level_losses,
                       std::span<const double> lambda_adv) {
  if (per_level_losses.size() != lambda_adv.size()) {
    throw InvalidInput("multi_level_adv: one loss per configured level required");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < lambda_adv.size(); ++k) total += lambda_adv[k] * per_level_losses[k];
  return total;
}

namespace {

bool outside_open_unit(const torch::Tensor& p) {
  return (p < kGanProbClamp).logical_or(p > 1.0 - kGanProbClamp).any().item<bool>();
}

torch::Tensor clamp_prob(const torch::Tensor& p) {
  return p.clamp(kGanProbClamp, 1.0 - kGanProbClamp);
}

}  // namespace

torch::Tensor gan_d_loss(const torch::Tensor& d_real_out, const torch::Tensor& d_fake_out,
                         GanLossVariant variant) {
  if (variant == GanLossVariant::kLog) {
    return -torch::log(clamp_prob(d_real_out)).mean() -
           torch::log(1.0 - clamp_prob(d_fake_out)).mean();
  }
  return (d_real_out - 1.0).pow(2).mean() + d_fake_out.pow(2).mean();
}

torch::Tensor gan_g_loss(const torch::Tensor& d_fake_out, GanLossVariant variant) {
  if (variant == GanLossVariant::kLog) return -torch::log(clamp_prob(d_fake_out)).mean();
  return (d_fake_out - 1.0).pow(2).mean();
}

GanLosses translation_gan_losses(const torch::Tensor& d_real_out,
                                 const torch::Tensor& d_fake_out, GanLossVariant variant) {
  GanLosses out;
  out.d_loss = gan_d_loss(d_real_out, d_fake_out, variant);
  out.g_loss = gan_g_loss(d_fake_out, variant);
  if (variant == GanLossVariant::kLog) {
    out.clamped = outside_open_unit(d_real_out.detach()) || outside_open_unit(d_fake_out.detach());
  }
  return out;
}

torch::Tensor cycle_loss(const torch::Tensor& x, const torch::Tensor& x_rec) {
  check_same_shape(x, x_rec, "cycle_loss");
  return (x - x_rec).abs().mean();
}

double cycle_loss(const ImageTensor& x, const ImageTensor& x_rec) {
  if (!x.pixels.same_shape(x_rec.pixels)) throw InvalidInput("cycle_loss: shape mismatch");
  if (x.pixels.empty()) throw InvalidInput("cycle_loss: empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.pixels.size(); ++i) {
    sum += std::abs(static_cast<double>(x.pixels.values[i]) - x_rec.pixels.values[i]);
  }
  return sum / static_cast<double>(x.pixels.size());
}

StudentObjective total_student_loss(const StudentLossTerms& terms, const LossWeights& weights) {
  if (!terms.seg.defined()) throw InvalidInput("total_student_loss: missing supervised term");
  StudentObjective out;
  auto& b = out.breakdown;
  b.weights = weights;
  b.seg = value_of(terms.seg);
  b.con_intra = value_of(terms.con_intra);
  b.adv_intra = value_of(terms.adv_intra);
  b.con_inter = value_of(terms.con_inter);
  b.adv_inter = value_of(terms.adv_inter);
  for (double v : {b.seg, b.con_intra, b.adv_intra, b.con_inter, b.adv_inter}) {
    if (!std::isfinite(v)) throw TrainingDiverged("non-finite student loss component");
  }
  b.total = b.seg + weights.con_intra * b.con_intra + weights.adv_intra * b.adv_intra +
            weights.con_inter * b.con_inter + weights.adv_inter * b.adv_inter;

  out.total = terms.seg;
  auto add = [&](const torch::Tensor& term, double w) {
    if (term.defined() && w != 0.0) out.total = out.total + w * term;
  };
  add(terms.con_intra, weights.con_intra);
  add(terms.adv_intra, weights.adv_intra);
  add(terms.con_inter, weights.con_inter);
  add(terms.adv_inter, weights.adv_inter);
  return out;
}

double rampup_weight(double t, double t_max, double l_max) {
  if (t_max <= 0.0) throw InvalidInput("rampup_weight: t_max must be positive");
  if (t < 0.0) throw InvalidInput("rampup_weight: negative t");
  if (l_max < 0.0) throw InvalidInput("rampup_weight: negative L_max");
  const double phase = 1.0 - std::min(t, t_max) / t_max;
  return l_max * std::exp(-5.0 * phase * phase);
}

LossWeights rampup_weights(double epoch, const TrainingConfig& config) {
  std::array<double, 4> w{};
  for (std::size_t k = 0; k < 4; ++k) {
    w[k] = rampup_weight(epoch, config.t_max, config.l_max[k]);
  }
  return LossWeights::from_array(w);
}

double lr_at(int epoch, const TrainingConfig& config) {
  if (epoch < 0) throw InvalidInput("lr_at: negative epoch");
  if (config.warmup_epochs <= 0 || epoch >= config.warmup_epochs) return config.lr_peak;
  return config.lr_peak * static_cast<double>(epoch) / config.warmup_epochs;
}

}  // namespace leuda
