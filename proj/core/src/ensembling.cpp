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

#include "leuda/ensembling.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "leuda/tensor_utils.hpp"

namespace leuda {
namespace {

constexpr std::size_t kMaxAuditMessages = 32;
constexpr double kAdditivityTolerance = 1e-9;

torch::Tensor discriminator_input(const torch::Tensor& probs, DiscriminatorInput mode) {
  return mode == DiscriminatorInput::kSelfInformation ? self_information(probs) : probs;
}

torch::Tensor rows_tensor(const std::vector<std::int64_t>& rows) {
  return torch::tensor(rows, torch::kInt64);
}

std::vector<torch::Tensor> state_tensors(torch::nn::Module& m) {
  std::vector<torch::Tensor> out = m.parameters();
  for (auto& b : m.buffers()) out.push_back(b);
  return out;
}

std::vector<torch::Tensor> clone_all(const std::vector<torch::Tensor>& ts) {
  std::vector<torch::Tensor> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(t.detach().clone());
  return out;
}

bool all_equal(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!torch::equal(a[i], b[i])) return false;
  }
  return true;
}

std::size_t level_index(const std::vector<int>& levels, int level) {
  const auto it = std::find(levels.begin(), levels.end(), level);
  if (it == levels.end()) throw InvalidInput("no discriminator for level " + std::to_string(level));
  return static_cast<std::size_t>(it - levels.begin());
}

MultiLevelOutput teacher_forward(TeacherState& teacher, const torch::Tensor& images) {
  torch::NoGradGuard no_grad;
  return teacher.model->forward(images).detached();
}

// Student adversarial terms against one branch's discriminators. Fake inputs
// are student rows of kind S; real inputs are teacher rows of the branch's
// synthetic kinds.
void adversarial_terms(std::vector<Discriminator>& discriminators,
                       const std::vector<int>& levels, const MultiLevelOutput& student_out,
                       const std::vector<std::int64_t>& fake_rows,
                       const MultiLevelOutput& teacher_out,
                       const std::vector<std::int64_t>& real_rows,
                       const TrainingConfig& config, BranchResult& result) {
  result.adv_g = torch::zeros({});
  if (fake_rows.empty() || real_rows.empty()) return;
  const auto fake_idx = rows_tensor(fake_rows);
  const auto real_idx = rows_tensor(real_rows);
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const int level = levels[k];
    const auto fake = discriminator_input(
        student_out.at_level(level).probs.index_select(0, fake_idx), config.discriminator_input);
    const auto real = discriminator_input(
        teacher_out.at_level(level).probs.index_select(0, real_idx), config.discriminator_input)
                          .detach();
    const auto g = ensemble_adv_g_loss(discriminators[k]->forward(fake), config.gan_loss_variant);
    result.adv_g = result.adv_g + config.lambda_adv_per_level[k] * g;
    result.cache.push_back({level, fake.detach(), real});
    ++result.engaged_discriminators;
  }
}

void evaluate_cached_d_losses(std::vector<Discriminator>& discriminators,
                              const std::vector<int>& levels, const TrainingConfig& config,
                              BranchResult& result) {
  torch::NoGradGuard no_grad;
  for (const auto& c : result.cache) {
    auto& d = discriminators[level_index(levels, c.level)];
    result.adv_d.push_back(
        ensemble_adv_d_loss(d->forward(c.student_fake), d->forward(c.teacher_real),
                            config.gan_loss_variant)
            .item<double>());
  }
}

struct StudentRows {
  MultiLevelOutput out;
  std::vector<ImageKind> kinds;
};

// Intra branch over the given student rows; `clean` holds the unperturbed
// images of those rows.
BranchResult intra_branch(ModelBundle& model, const StudentRows& student,
                          const std::vector<std::int64_t>& rows, const torch::Tensor& clean,
                          const TrainingConfig& config, std::uint64_t step_seed,
                          AuditReport* audit) {
  BranchResult result;
  result.con = torch::zeros({});
  result.adv_g = torch::zeros({});
  if (rows.empty()) return result;
  std::vector<std::int64_t> real_rows;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const ImageKind kind = student.kinds[rows[r]];
    if (audit) {
      audit->record_input("intra_teacher", kind,
                          intra_teacher_accepts(kind, config.intra_include_cycle_source));
    }
    if (in_source_like_domain(kind)) real_rows.push_back(static_cast<std::int64_t>(r));
  }
  const auto teacher_in = add_noise(clean, config.noise_sigma, derive_seed(step_seed, 2));
  const auto teacher_out = teacher_forward(model.teacher_intra, teacher_in);
  const auto student_probs = student.out.main().probs.index_select(0, rows_tensor(rows));
  result.con = intra_consistency(student_probs, teacher_out.main().probs);

  std::vector<std::int64_t> fake_rows;
  for (std::size_t r = 0; r < student.kinds.size(); ++r) {
    if (student.kinds[r] == ImageKind::kS) fake_rows.push_back(static_cast<std::int64_t>(r));
  }
  adversarial_terms(model.d_intra, model.levels, student.out, fake_rows, teacher_out, real_rows,
                    config, result);
  return result;
}

BranchResult inter_branch(ModelBundle& model, const StudentRows& student,
                          const std::vector<std::int64_t>& rows, const torch::Tensor& targets,
                          const std::vector<ImageKind>& target_kinds,
                          const TrainingConfig& config, std::uint64_t step_seed,
                          AuditReport* audit) {
  BranchResult result;
  result.con = torch::zeros({});
  result.adv_g = torch::zeros({});
  if (rows.empty()) return result;
  std::vector<std::int64_t> real_rows;
  for (std::size_t r = 0; r < target_kinds.size(); ++r) {
    if (audit) audit->record_input("inter_teacher", target_kinds[r],
                                   inter_teacher_accepts(target_kinds[r]));
    if (in_target_like_domain(target_kinds[r])) real_rows.push_back(static_cast<std::int64_t>(r));
  }
  const auto teacher_in = add_noise(targets, config.noise_sigma, derive_seed(step_seed, 3));
  const auto teacher_out = teacher_forward(model.teacher_inter, teacher_in);
  const auto student_probs = student.out.main().probs.index_select(0, rows_tensor(rows));
  result.con = inter_consistency(student_probs, teacher_out.main().probs);

  std::vector<std::int64_t> fake_rows;
  for (std::size_t r = 0; r < student.kinds.size(); ++r) {
    if (student.kinds[r] == ImageKind::kS) fake_rows.push_back(static_cast<std::int64_t>(r));
  }
  adversarial_terms(model.d_inter, model.levels, student.out, fake_rows, teacher_out, real_rows,
                    config, result);
  return result;
}

void check_config_levels(const ModelBundle& model, const TrainingConfig& config) {
  if (config.layer_set != model.levels) {
    throw InvalidInput("training layer set differs from the model bundle's levels");
  }
  if (config.lambda_adv_per_level.size() != model.levels.size() ||
      config.lambda_seg_per_level.size() != model.levels.size()) {
    throw InvalidInput("one lambda_seg and lambda_adv weight per level required");
  }
}

}  // namespace

TeacherState make_teacher(Segmenter& student) {
  TeacherState teacher;
  teacher.model = Segmenter(student->config());
  copy_state(*student, *teacher.model);
  for (auto& p : teacher.model->parameters()) p.set_requires_grad(false);
  teacher.model->eval();
  return teacher;
}

void ema_update(std::span<torch::Tensor> teacher, std::span<const torch::Tensor> student,
                double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw InvalidInput("ema_update: alpha outside [0, 1]");
  if (teacher.size() != student.size()) throw InvalidInput("ema_update: tensor count mismatch");
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    if (!teacher[i].sizes().equals(student[i].sizes())) {
      throw InvalidInput("ema_update: shape mismatch at tensor " + std::to_string(i));
    }
  }
  torch::NoGradGuard no_grad;
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    teacher[i].copy_(teacher[i].mul(alpha).add(student[i].detach(), 1.0 - alpha));
  }
}

void ema_update(TeacherState& teacher, Segmenter& student, double alpha) {
  auto t = state_tensors(*teacher.model);
  const auto s = state_tensors(*student);
  ema_update(std::span<torch::Tensor>(t), std::span<const torch::Tensor>(s), alpha);
  ++teacher.updates;
}

void ModelBundle::validate() const {
  if (student.is_empty()) throw InvalidInput("ModelBundle: missing student");
  const auto s = student->named_parameters();
  for (const TeacherState* t : {&teacher_intra, &teacher_inter}) {
    if (t->model.is_empty()) throw InvalidInput("ModelBundle: missing teacher");
    const auto tp = t->model->named_parameters();
    if (tp.size() != s.size()) throw InvalidInput("ModelBundle: teacher layout differs");
    for (const auto& item : tp) {
      const auto* other = s.find(item.key());
      if (!other || !other->sizes().equals(item.value().sizes())) {
        throw InvalidInput("ModelBundle: teacher parameter " + item.key() + " differs");
      }
      if (item.value().requires_grad()) {
        throw InvalidInput("ModelBundle: teacher parameter " + item.key() +
                           " requires gradients");
      }
    }
  }
  if (d_intra.size() != levels.size() || d_inter.size() != levels.size()) {
    throw InvalidInput("ModelBundle: one discriminator per level and branch required");
  }
}

std::vector<torch::Tensor> ModelBundle::discriminator_parameters() const {
  std::vector<torch::Tensor> out;
  for (const auto* group : {&d_intra, &d_inter}) {
    for (const auto& d : *group) {
      for (auto& p : d->parameters()) out.push_back(p);
    }
  }
  return out;
}

ModelBundle build_model_bundle(const SegmenterConfig& segmenter,
                               const DiscriminatorConfig& discriminator,
                               const TrainingConfig& config) {
  config.validate();
  SegmenterConfig seg = segmenter;
  seg.aux_levels = config.layer_set;
  ModelBundle model;
  model.levels = config.layer_set;
  model.student = build_segmenter(seg);
  model.teacher_intra = make_teacher(model.student);
  model.teacher_inter = make_teacher(model.student);
  DiscriminatorConfig dc = discriminator;
  dc.in_channels = seg.num_classes;
  for (std::size_t k = 0; k < model.levels.size(); ++k) {
    dc.seed = derive_seed(segmenter.seed, 10 + k, 1);
    model.d_intra.push_back(build_discriminator(dc));
    dc.seed = derive_seed(segmenter.seed, 10 + k, 2);
    model.d_inter.push_back(build_discriminator(dc));
  }
  model.validate();
  return model;
}

LossWeights ActiveLosses::mask(const LossWeights& w) const {
  return {con_intra ? w.con_intra : 0.0, adv_intra ? w.adv_intra : 0.0,
          con_inter ? w.con_inter : 0.0, adv_inter ? w.adv_inter : 0.0};
}

bool student_accepts(ImageKind kind) { return is_source_style(kind); }
bool inter_teacher_accepts(ImageKind kind) { return is_target_style(kind); }
bool intra_teacher_accepts(ImageKind kind, bool include_cycle_source) {
  return kind == ImageKind::kS || kind == ImageKind::kT2S ||
         (include_cycle_source && kind == ImageKind::kS2T2S);
}

torch::Tensor add_noise(const torch::Tensor& images, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw InvalidInput("add_noise: sigma must be non-negative");
  if (sigma == 0.0) return images;
  auto gen = at::make_generator<at::CPUGeneratorImpl>(mix_seed(seed));
  return images + sigma * torch::randn(images.sizes(), gen, images.options());
}

BranchResult intra_step(ModelBundle& model, std::span<const ImageTensor> images,
                        const TrainingConfig& config, std::uint64_t step_seed) {
  check_config_levels(model, config);
  std::vector<ImageTensor> kept;
  for (const auto& image : images) {
    if (intra_teacher_accepts(image.kind, config.intra_include_cycle_source)) {
      kept.push_back(image);
    }
  }
  if (kept.empty()) {
    return {torch::zeros({}), torch::zeros({}), {}, {}, 0};
  }
  const auto clean = images_to_tensor(kept);
  StudentRows student;
  student.out = model.student->forward(add_noise(clean, config.noise_sigma,
                                                 derive_seed(step_seed, 1)));
  std::vector<std::int64_t> rows;
  for (const auto& image : kept) {
    rows.push_back(static_cast<std::int64_t>(student.kinds.size()));
    student.kinds.push_back(image.kind);
  }
  auto result = intra_branch(model, student, rows, clean, config, step_seed, nullptr);
  evaluate_cached_d_losses(model.d_intra, model.levels, config, result);
  return result;
}

BranchResult inter_step(ModelBundle& model, std::span<const PairedSample> pairs,
                        const TrainingConfig& config, std::uint64_t step_seed) {
  check_config_levels(model, config);
  if (pairs.empty()) return {torch::zeros({}), torch::zeros({}), {}, {}, 0};
  std::vector<const ImageTensor*> sources, targets;
  std::vector<ImageKind> target_kinds;
  StudentRows student;
  std::vector<std::int64_t> rows;
  for (const auto& pair : pairs) {
    if (!pair.is_consistent()) throw InvalidInput("inter_step: inconsistent pair");
    rows.push_back(static_cast<std::int64_t>(sources.size()));
    sources.push_back(&pair.source_style);
    targets.push_back(&pair.target_style);
    student.kinds.push_back(pair.source_style.kind);
    target_kinds.push_back(pair.target_style.kind);
  }
  student.out = model.student->forward(
      add_noise(images_to_tensor(sources), config.noise_sigma, derive_seed(step_seed, 1)));
  auto result = inter_branch(model, student, rows, images_to_tensor(targets), target_kinds,
                             config, step_seed, nullptr);
  evaluate_cached_d_losses(model.d_inter, model.levels, config, result);
  return result;
}

DiscriminatorUpdate discriminator_step(ModelBundle& model,
                                       std::span<const AdversarialPair> intra_cache,
                                       std::span<const AdversarialPair> inter_cache,
                                       torch::optim::Optimizer& optimizer,
                                       const TrainingConfig& config) {
  DiscriminatorUpdate update;
  optimizer.zero_grad();
  torch::Tensor total;
  auto accumulate = [&](std::span<const AdversarialPair> cache,
                        std::vector<Discriminator>& ds, std::vector<double>& values) {
    for (const auto& c : cache) {
      auto& d = ds[level_index(model.levels, c.level)];
      const auto loss = ensemble_adv_d_loss(d->forward(c.student_fake.detach()),
                                            d->forward(c.teacher_real.detach()),
                                            config.gan_loss_variant);
      values.push_back(loss.item<double>());
      total = total.defined() ? total + loss : loss;
    }
  };
  accumulate(intra_cache, model.d_intra, update.intra_d);
  accumulate(inter_cache, model.d_inter, update.inter_d);
  if (total.defined()) {
    total.backward();
    optimizer.step();
  }
  return update;
}

void AuditReport::record_input(const std::string& role, ImageKind kind, bool allowed) {
  ++inputs[role][std::string(to_string(kind))];
  if (!allowed) {
    fail(routing_violations, role + " received an image of kind " + std::string(to_string(kind)));
  }
}

void AuditReport::fail(std::int64_t& counter, std::string message) {
  ++counter;
  if (messages.size() < kMaxAuditMessages) messages.push_back(std::move(message));
}

nlohmann::json to_json(const AuditReport& r) {
  return {{"iterations", r.iterations},
          {"routing_violations", r.routing_violations},
          {"isolation_violations", r.isolation_violations},
          {"additivity_violations", r.additivity_violations},
          {"max_additivity_residual", r.max_additivity_residual},
          {"inputs", r.inputs},
          {"messages", r.messages}};
}

void StudentOptimizers::set_lr(double lr) {
  auto apply = [](torch::optim::Adam* opt, double value) {
    if (!opt) return;
    for (auto& group : opt->param_groups()) {
      static_cast<torch::optim::AdamOptions&>(group.options()).lr(value);
    }
  };
  apply(student.get(), lr);
  apply(discriminators.get(), lr * disc_lr_scale);
}

StudentOptimizers make_optimizers(ModelBundle& model, const TrainingConfig& config, double lr) {
  const auto options =
      torch::optim::AdamOptions(lr).betas({config.adam_beta1, config.adam_beta2});
  StudentOptimizers opts;
  opts.student = std::make_unique<torch::optim::Adam>(model.student->parameters(), options);
  opts.discriminators = std::make_unique<torch::optim::Adam>(
      model.discriminator_parameters(),
      torch::optim::AdamOptions(lr * config.disc_lr_scale)
          .betas({config.adam_beta1, config.adam_beta2}));
  opts.disc_lr_scale = config.disc_lr_scale;
  return opts;
}

IterationResult train_iteration(ModelBundle& model, StudentOptimizers& optimizers,
                                const Batch& batch, const ActiveLosses& active,
                                const LossWeights& weights, const TrainingConfig& config,
                                std::uint64_t step_seed, bool update_teachers,
                                AuditReport* audit) {
  check_config_levels(model, config);
  if (batch.labeled.empty()) throw InvalidInput("train_iteration: no labeled images");
  const bool use_pairs = active.any() && !batch.pairs.empty();

  std::vector<const ImageTensor*> student_images;
  std::vector<const SegMask*> masks;
  StudentRows student;
  for (const auto& item : batch.labeled) {
    student_images.push_back(&item.image);
    masks.push_back(&item.mask);
    student.kinds.push_back(item.image.kind);
  }
  const auto n_labeled = static_cast<std::int64_t>(batch.labeled.size());
  std::vector<std::int64_t> pair_rows, intra_rows;
  std::vector<const ImageTensor*> intra_images, pair_targets;
  std::vector<ImageKind> target_kinds;
  if (use_pairs) {
    for (const auto& pair : batch.pairs) {
      const auto row = static_cast<std::int64_t>(student_images.size());
      pair_rows.push_back(row);
      student_images.push_back(&pair.source_style);
      student.kinds.push_back(pair.source_style.kind);
      pair_targets.push_back(&pair.target_style);
      target_kinds.push_back(pair.target_style.kind);
      if (intra_teacher_accepts(pair.source_style.kind, config.intra_include_cycle_source)) {
        intra_rows.push_back(row);
        intra_images.push_back(&pair.source_style);
      }
    }
  }
  if (audit) {
    ++audit->iterations;
    for (ImageKind kind : student.kinds) audit->record_input("student", kind, student_accepts(kind));
  }

  const auto clean = images_to_tensor(student_images);
  student.out = model.student->forward(
      add_noise(clean, config.noise_sigma, derive_seed(step_seed, 1)));

  StudentLossTerms terms;
  terms.seg = supervised_seg_loss(student.out.slice(0, n_labeled), masks_to_tensor(masks),
                                  model.levels, config.lambda_seg_per_level);
  BranchResult intra, inter;
  if (use_pairs && active.any_intra() && !intra_rows.empty()) {
    intra = intra_branch(model, student, intra_rows, images_to_tensor(intra_images), config,
                         step_seed, audit);
    if (active.con_intra) terms.con_intra = intra.con;
    if (active.adv_intra) terms.adv_intra = intra.adv_g;
  }
  if (use_pairs && active.any_inter()) {
    inter = inter_branch(model, student, pair_rows, images_to_tensor(pair_targets),
                         target_kinds, config, step_seed, audit);
    if (active.con_inter) terms.con_inter = inter.con;
    if (active.adv_inter) terms.adv_inter = inter.adv_g;
  }

  IterationResult result;
  result.student_images = static_cast<std::int64_t>(student_images.size());
  auto objective = total_student_loss(terms, active.mask(weights));
  result.breakdown = objective.breakdown;
  if (audit) {
    const double residual = objective.breakdown.additivity_residual();
    audit->max_additivity_residual = std::max(audit->max_additivity_residual, residual);
    if (!(residual <= kAdditivityTolerance)) {
      audit->fail(audit->additivity_violations,
                  "loss breakdown residual " + std::to_string(residual));
    }
  }

  optimizers.student->zero_grad();
  objective.total.backward();

  std::vector<torch::Tensor> student_before, intra_before, inter_before;
  if (audit) {
    student_before = clone_all(state_tensors(*model.student));
    intra_before = clone_all(state_tensors(*model.teacher_intra.model));
    inter_before = clone_all(state_tensors(*model.teacher_inter.model));
  }
  const std::vector<AdversarialPair> no_cache;
  result.discriminators = discriminator_step(
      model, active.adv_intra ? std::span<const AdversarialPair>(intra.cache) : no_cache,
      active.adv_inter ? std::span<const AdversarialPair>(inter.cache) : no_cache,
      *optimizers.discriminators, config);
  if (audit) {
    if (!all_equal(student_before, clone_all(state_tensors(*model.student)))) {
      audit->fail(audit->isolation_violations, "discriminator step changed student parameters");
    }
    if (!all_equal(intra_before, state_tensors(*model.teacher_intra.model)) ||
        !all_equal(inter_before, state_tensors(*model.teacher_inter.model))) {
      audit->fail(audit->isolation_violations, "discriminator step changed teacher parameters");
    }
  }

  optimizers.student->step();

  if (update_teachers) {
    ema_update(model.teacher_intra, model.student, config.ema_alpha);
    ema_update(model.teacher_inter, model.student, config.ema_alpha);
  }
  if (audit) {
    const auto student_after = state_tensors(*model.student);
    for (auto* pair : {&intra_before, &inter_before}) {
      Segmenter teacher =
          pair == &intra_before ? model.teacher_intra.model : model.teacher_inter.model;
      const auto now = state_tensors(*teacher);
      for (std::size_t i = 0; i < now.size(); ++i) {
        const auto expected =
            update_teachers
                ? (*pair)[i].mul(config.ema_alpha).add(student_after[i], 1.0 - config.ema_alpha)
                : (*pair)[i];
        if (!torch::equal(now[i], expected)) {
          audit->fail(audit->isolation_violations,
                      "teacher tensor " + std::to_string(i) + " deviates from the EMA recurrence");
          break;
        }
        if (now[i].requires_grad() || now[i].grad().defined()) {
          audit->fail(audit->isolation_violations,
                      "teacher tensor " + std::to_string(i) + " carries gradient state");
          break;
        }
      }
    }
  }
  return result;
}

}  // namespace leuda
