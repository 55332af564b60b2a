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

// Dual-teacher self-ensembling: EMA teachers, routing of images and pairs to
// the student and both teachers, the multi-level adversarial branch and one
// full stage-2 training iteration.

#ifndef LEUDA_ENSEMBLING_HPP_
#define LEUDA_ENSEMBLING_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "leuda/dataset.hpp"
#include "leuda/losses.hpp"
#include "leuda/networks.hpp"
#include "leuda/translation.hpp"
#include "leuda/types.hpp"

namespace leuda {

/// EMA copy of the student. Parameters never require gradients.
struct TeacherState {
  Segmenter model{nullptr};
  std::int64_t updates = 0;
};

/// Builds a teacher with the student's architecture and current weights.
TeacherState make_teacher(Segmenter& student);

/// theta' <- alpha * theta' + (1 - alpha) * theta for every parameter and
/// buffer; increments the update count. Throws InvalidInput on a shape or
/// layout mismatch or alpha outside [0, 1].
void ema_update(TeacherState& teacher, Segmenter& student, double alpha);
void ema_update(std::span<torch::Tensor> teacher, std::span<const torch::Tensor> student,
                double alpha);

/// Every trainable component of the framework.
struct ModelBundle {
  Segmenter student{nullptr};
  TeacherState teacher_intra;
  TeacherState teacher_inter;
  /// One discriminator per entry of the layer set, in layer-set order.
  std::vector<Discriminator> d_intra;
  std::vector<Discriminator> d_inter;
  std::vector<int> levels;
  /// Optional; required only for evaluation on translated target images.
  TranslatorPair translators;

  /// Throws InvalidInput when the teachers' parameter shapes differ from the
  /// student's or a teacher parameter requires gradients.
  void validate() const;
  std::vector<torch::Tensor> discriminator_parameters() const;
};

/// Student seeded from `segmenter.seed`, teachers copied from it, one
/// intra and one inter discriminator per level of `config.layer_set`.
ModelBundle build_model_bundle(const SegmenterConfig& segmenter,
                               const DiscriminatorConfig& discriminator,
                               const TrainingConfig& config);

/// Which unsupervised terms a method trains with.
struct ActiveLosses {
  bool con_intra = false;
  bool adv_intra = false;
  bool con_inter = false;
  bool adv_inter = false;

  bool any() const { return con_intra || adv_intra || con_inter || adv_inter; }
  bool any_intra() const { return con_intra || adv_intra; }
  bool any_inter() const { return con_inter || adv_inter; }
  /// Zeroes the weights of inactive terms.
  LossWeights mask(const LossWeights& weights) const;
  friend bool operator==(const ActiveLosses&, const ActiveLosses&) = default;
};

/// Image kinds each network may consume.
bool student_accepts(ImageKind kind);
bool inter_teacher_accepts(ImageKind kind);
bool intra_teacher_accepts(ImageKind kind, bool include_cycle_source);

/// Additive Gaussian noise from a generator seeded with `seed`.
torch::Tensor add_noise(const torch::Tensor& images, double sigma, std::uint64_t seed);

/// Detached predictions fed to one level's discriminator.
struct AdversarialPair {
  int level = 1;
  /// Student predictions on original source images (labelled fake).
  torch::Tensor student_fake;
  /// Teacher predictions on synthetic-domain images (labelled real).
  torch::Tensor teacher_real;
};

struct BranchResult {
  torch::Tensor con;
  /// Sum over levels of lambda_adv * student adversarial loss.
  torch::Tensor adv_g;
  /// Discriminator loss per level evaluated on the cached pairs.
  std::vector<double> adv_d;
  std::vector<AdversarialPair> cache;
  /// Levels whose discriminator received both real and fake inputs.
  int engaged_discriminators = 0;
};

/// Intra-domain branch on a batch of source-style images: the student sees
/// x + xi, G_intra sees x + xi'. Consistency is the level-1 MSE; per level,
/// D_intra scores student outputs on kind S against teacher outputs on the
/// source-like synthetic kinds. An empty batch yields zero losses.
BranchResult intra_step(ModelBundle& model, std::span<const ImageTensor> images,
                        const TrainingConfig& config, std::uint64_t step_seed);

/// Inter-domain branch: the student sees each pair's source-style member and
/// G_inter its target-style member. Consistency compares level-1
/// self-information maps; D_inter scores student outputs on kind S against
/// teacher outputs on the target-like synthetic kinds.
BranchResult inter_step(ModelBundle& model, std::span<const PairedSample> pairs,
                        const TrainingConfig& config, std::uint64_t step_seed);

struct DiscriminatorUpdate {
  std::vector<double> intra_d;
  std::vector<double> inter_d;
};

/// One optimizer step per branch on the cached predictions. Student and
/// teacher parameters are not touched.
DiscriminatorUpdate discriminator_step(ModelBundle& model,
                                       std::span<const AdversarialPair> intra_cache,
                                       std::span<const AdversarialPair> inter_cache,
                                       torch::optim::Optimizer& optimizer,
                                       const TrainingConfig& config);

/// Counters of routing, isolation and additivity checks over a run.
struct AuditReport {
  std::int64_t iterations = 0;
  std::int64_t routing_violations = 0;
  std::int64_t isolation_violations = 0;
  std::int64_t additivity_violations = 0;
  double max_additivity_residual = 0.0;
  /// role -> kind -> number of images.
  std::map<std::string, std::map<std::string, std::int64_t>> inputs;
  std::vector<std::string> messages;

  bool clean() const {
    return routing_violations == 0 && isolation_violations == 0 && additivity_violations == 0;
  }
  void record_input(const std::string& role, ImageKind kind, bool allowed);
  void fail(std::int64_t& counter, std::string message);
};

nlohmann::json to_json(const AuditReport& report);

struct StudentOptimizers {
  std::unique_ptr<torch::optim::Adam> student;
  std::unique_ptr<torch::optim::Adam> discriminators;
  double disc_lr_scale = 1.0;

  /// Student lr `lr`; discriminators lr * disc_lr_scale.
  void set_lr(double lr);
};

StudentOptimizers make_optimizers(ModelBundle& model, const TrainingConfig& config,
                                  double lr);

struct IterationResult {
  LossBreakdown breakdown;
  DiscriminatorUpdate discriminators;
  std::int64_t student_images = 0;
};

/// One stage-2 iteration: student forward on labeled images and pair
/// source-style members, supervised loss, active unsupervised branches,
/// backward, discriminator step, student step and (when `update_teachers`)
/// the EMA update of both teachers. With `audit`, routing, isolation and
/// additivity are checked and recorded.
IterationResult train_iteration(ModelBundle& model, StudentOptimizers& optimizers,
                                const Batch& batch, const ActiveLosses& active,
                                const LossWeights& weights, const TrainingConfig& config,
                                std::uint64_t step_seed, bool update_teachers,
                                AuditReport* audit = nullptr);

}  // namespace leuda

#endif  // LEUDA_ENSEMBLING_HPP_
