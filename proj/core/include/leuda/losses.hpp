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

// Training objectives of both stages, the self-information transform and the
// epoch schedules (consistency ramp-up, learning-rate warm-up).
//
// Tensor losses take (B, C, H, W) probability or logit batches and (B, H, W)
// int64 label batches and return scalar tensors that support autograd.

#ifndef LEUDA_LOSSES_HPP_
#define LEUDA_LOSSES_HPP_

#include <array>
#include <span>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "leuda/networks.hpp"
#include "leuda/types.hpp"

namespace leuda {

/// Floor applied inside logarithms of probabilities.
inline constexpr double kProbFloor = 1e-12;
/// Clamp applied to discriminator probabilities under the log GAN variant.
inline constexpr double kGanProbClamp = 1e-7;
inline constexpr double kDiceSmooth = 1e-5;

/// Weights of the four unsupervised terms at one step.
struct LossWeights {
  double con_intra = 0.0;
  double adv_intra = 0.0;
  double con_inter = 0.0;
  double adv_inter = 0.0;

  static LossWeights from_array(const std::array<double, 4>& values);
  std::array<double, 4> to_array() const { return {con_intra, adv_intra, con_inter, adv_inter}; }
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossBreakdown {
  double seg = 0.0;
  double con_intra = 0.0;
  double adv_intra = 0.0;
  double con_inter = 0.0;
  double adv_inter = 0.0;
  double total = 0.0;
  LossWeights weights;

  /// |total - weighted sum of components|.
  double additivity_residual() const;
};

nlohmann::json to_json(const LossWeights& weights);
nlohmann::json to_json(const LossBreakdown& breakdown);

/// Mean per-pixel negative log-likelihood (natural log) of `labels` under
/// softmax(`logits`).
torch::Tensor pixel_cross_entropy(const torch::Tensor& logits, const torch::Tensor& labels);

/// Mean over foreground classes c >= 1 of 1 - 2 sum(p g) / (sum p + sum g + eps),
/// sums running over batch and pixels.
torch::Tensor dice_loss(const torch::Tensor& probs, const torch::Tensor& labels,
                        double eps = kDiceSmooth);

/// CE + Dice for one level.
torch::Tensor segmentation_loss(const LevelOutput& output, const torch::Tensor& labels);

/// Sum over `levels` of lambda[k] * (CE + Dice) at levels[k]. Throws
/// InvalidInput on labels outside [0, C) or mismatched level/weight counts.
torch::Tensor supervised_seg_loss(const MultiLevelOutput& outputs, const torch::Tensor& labels,
                                  std::span<const int> levels,
                                  std::span<const double> lambda_seg);

/// Mean squared difference over batch, classes and pixels.
torch::Tensor intra_consistency(const torch::Tensor& student, const torch::Tensor& teacher);

/// -p * log2(p) element-wise, 0 where p = 0.
torch::Tensor self_information(const torch::Tensor& probs);
ProbMap self_information(const ProbMap& probs);

/// Squared distance of self-information maps summed over classes, averaged
/// over pixels and batch.
torch::Tensor inter_consistency(const torch::Tensor& student, const torch::Tensor& teacher);

struct AdversarialLosses {
  torch::Tensor d_loss;
  torch::Tensor g_loss;
};

/// Discriminator objective with teacher predictions as real and student
/// predictions as fake. Scores are raw (pre-sigmoid). Throws TrainingDiverged
/// on NaN scores.
torch::Tensor ensemble_adv_d_loss(const torch::Tensor& d_on_student,
                                  const torch::Tensor& d_on_teacher, GanLossVariant variant);
/// Non-saturating student objective: push student scores towards real.
torch::Tensor ensemble_adv_g_loss(const torch::Tensor& d_on_student, GanLossVariant variant);
AdversarialLosses ensemble_adv_losses(const torch::Tensor& d_on_student,
                                      const torch::Tensor& d_on_teacher,
                                      GanLossVariant variant);

/// Sum of lambda[k] * losses[k]; throws InvalidInput on count mismatch.
torch::Tensor multi_level_adv(std::span<const torch::Tensor> per_level_losses,
                              std::span<const double> lambda_adv);
double multi_level_adv(std::span<const double> per_level_losses,
                       std::span<const double> lambda_adv);

struct GanLosses {
  torch::Tensor d_loss;
  torch::Tensor g_loss;
  /// Set when a log-variant input fell outside (kGanProbClamp, 1 - kGanProbClamp).
  bool clamped = false;
};

/// Translation GAN objective. Under kLog the inputs are probabilities; under
/// kLeastSquares they are raw scores.
GanLosses translation_gan_losses(const torch::Tensor& d_real_out,
                                 const torch::Tensor& d_fake_out, GanLossVariant variant);
torch::Tensor gan_d_loss(const torch::Tensor& d_real_out, const torch::Tensor& d_fake_out,
                         GanLossVariant variant);
torch::Tensor gan_g_loss(const torch::Tensor& d_fake_out, GanLossVariant variant);

/// Mean absolute difference; throws InvalidInput on shape mismatch.
torch::Tensor cycle_loss(const torch::Tensor& x, const torch::Tensor& x_rec);
double cycle_loss(const ImageTensor& x, const ImageTensor& x_rec);

struct StudentLossTerms {
  torch::Tensor seg;
  torch::Tensor con_intra;
  torch::Tensor adv_intra;
  torch::Tensor con_inter;
  torch::Tensor adv_inter;
};

struct StudentObjective {
  /// Differentiable weighted sum.
  torch::Tensor total;
  /// Component values with the total accumulated in double precision.
  LossBreakdown breakdown;
};

/// seg + weighted unsupervised terms. Undefined component tensors count as
/// zero. Throws TrainingDiverged on a non-finite component.
StudentObjective total_student_loss(const StudentLossTerms& terms, const LossWeights& weights);

/// L_max * exp(-5 (1 - t / t_max)^2), with t clamped to t_max.
double rampup_weight(double t, double t_max, double l_max);
/// Ramp-up of every entry of config.l_max at `epoch`.
LossWeights rampup_weights(double epoch, const TrainingConfig& config);

/// lr_peak * min(1, epoch / warmup_epochs).
double lr_at(int epoch, const TrainingConfig& config);

}  // namespace leuda

#endif  // LEUDA_LOSSES_HPP_
