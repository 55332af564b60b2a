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

#include "leuda/trainer.hpp"

#include <chrono>
#include <fstream>
#include <set>

#include "leuda/checkpoint.hpp"
#include "leuda/dataset_io.hpp"
#include "leuda/log.hpp"
#include "leuda/report.hpp"
#include "leuda/synthdata.hpp"

namespace leuda {
namespace fs = std::filesystem;
namespace {

struct MethodInfo {
  Method method;
  const char* name;
};

constexpr MethodInfo kMethods[] = {
    {Method::kNoAdaptation, "no_adaptation"},
    {Method::kTranslationOnly, "translation_only"},
    {Method::kIntraTeacher, "intra_teacher"},
    {Method::kInterTeacher, "inter_teacher"},
    {Method::kDualTeacher, "dual_teacher"},
    {Method::kDualAdversarialTeacher, "dual_adversarial_teacher"},
    {Method::kSupervisedUpper, "supervised_upper"},
};

// Keys that influence the translators and synthetic domains.
const std::set<std::string>& stage1_keys() {
  static const std::set<std::string> keys = {
      "n_subjects",     "slices_per_subject", "image_size",      "canvas_margin",
      "phantom_seed",   "min_intensity_gap",  "slice_spacing",   "target_gamma",
      "target_invert",  "dataset_dir",        "direction",       "train_fraction",
      "label_ratio",    "gen_base_width",     "gen_num_downsample", "gen_res_blocks",
      "gen_residual_output", "gen_identity_init", "dcam_disc_base_width", "dcam_disc_layers",
      "dcam_epochs",    "dcam_batch_size",    "dcam_iterations_per_epoch", "dcam_lr",
      "dcam_beta1",     "dcam_beta2",         "lambda_cycle",    "lambda_identity",
      "dcam_gan_loss_variant"};
  return keys;
}

std::string stage1_hash(const ExperimentConfig& config, std::uint64_t seed) {
  nlohmann::json subset = nlohmann::json::object();
  const nlohmann::json flat = to_flat_json(config);
  for (const auto& [key, value] : flat.items()) {
    if (stage1_keys().contains(key)) subset[key] = value;
  }
  subset["seed"] = seed;
  return config_hash(subset);
}

}  // namespace

std::string run_config_hash(const ExperimentConfig& config, Method method, std::uint64_t seed) {
  auto flat = to_flat_json(config);
  flat["method"] = std::string(to_string(method));
  flat["seeds"] = {seed};
  // Runtime knobs that do not change the trained weights.
  for (const char* key : {"ablation_methods", "threads", "audit", "checkpoint_every", "log_level"}) {
    flat.erase(key);
  }
  return config_hash(flat);
}

namespace {

void write_json(const fs::path& path, const nlohmann::json& value) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << value.dump(2) << "\n";
}

std::vector<Subject> gather(std::span<const Subject> subjects, std::span<const std::string> ids) {
  const auto index = index_subjects(subjects);
  std::vector<Subject> out;
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw InvalidInput("unknown subject id: " + id);
    out.push_back(*it->second);
  }
  return out;
}

std::vector<std::string> source_train_ids(const DatasetSplit& split) {
  std::vector<std::string> ids = split.labeled_source;
  ids.insert(ids.end(), split.unlabeled_source.begin(), split.unlabeled_source.end());
  return ids;
}

void configure_runtime(const ExperimentConfig& config) {
  torch::set_num_threads(config.threads);
  log::set_level(config.log_level);
}

Batch augment_batch(Batch batch, const AugmentParams& params, std::uint64_t seed) {
  for (std::size_t i = 0; i < batch.labeled.size(); ++i) {
    auto& item = batch.labeled[i];
    std::tie(item.image, item.mask) =
        augment(item.image, item.mask, params, derive_seed(seed, 1, i));
  }
  for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
    auto& pair = batch.pairs[i];
    const auto transform = sample_transform(params, derive_seed(seed, 2, i));
    pair.source_style = apply_transform(pair.source_style, transform);
    pair.target_style = apply_transform(pair.target_style, transform);
  }
  return batch;
}

std::vector<const Subject*> target_test_subjects(const ExperimentData& data) {
  const auto index = index_subjects(data.subjects);
  std::vector<const Subject*> out;
  for (const auto& id : data.split.target_test) out.push_back(index.at(id));
  if (out.empty()) throw InvalidInput("split has no target test subjects");
  return out;
}

struct PoolsAndConfig {
  TrainingPools pools;
  TrainingConfig training;
};

// Trains a student on `pools` and evaluates it; shared by every method.
RunRecord train_and_evaluate(const ExperimentConfig& cfg, const ExperimentData& data,
                             Method method, PoolsAndConfig setup, TranslatorPair* translators,
                             std::uint64_t seed, const fs::path& dir) {
  const auto started = std::chrono::steady_clock::now();
  configure_runtime(cfg);
  fs::create_directories(dir);

  RunRecord record;
  record.method = method;
  record.seed = seed;
  record.direction = std::string(to_string(cfg.direction));
  record.config_hash = run_config_hash(cfg, method, seed);
  record.overrides = config_overrides(cfg);
  record.dir = dir;
  if (method == Method::kSupervisedUpper) record.tags.push_back("upper_bound");

  const TrainingConfig& training = setup.training;
  const ActiveLosses active = active_losses(method);
  ModelBundle model = build_model_bundle(cfg.segmenter, cfg.discriminator, training);
  if (translators) model.translators = *translators;
  auto optimizers = make_optimizers(model, training, lr_at(1, training));
  if (cfg.audit) record.audit.emplace();

  const int iterations = [&] {
    if (training.iterations_per_epoch > 0) return training.iterations_per_epoch;
    if (active.any() && training.batch_unlabeled > 0) {
      return static_cast<int>((setup.pools.pairs.size() + training.batch_unlabeled - 1) /
                              training.batch_unlabeled);
    }
    return static_cast<int>((setup.pools.labeled.size() + training.batch_labeled - 1) /
                            training.batch_labeled);
  }();

  std::ofstream schedule(dir / "schedule.jsonl", std::ios::trunc);
  std::ofstream losses(dir / "losses.csv", std::ios::trunc);
  losses << "epoch,iteration,lr,seg,con_intra,adv_intra,con_inter,adv_inter,total,"
            "w_con_intra,w_adv_intra,w_con_inter,w_adv_inter\n";
  losses.precision(17);

  std::int64_t global_iteration = 0;
  for (int epoch = 1; epoch <= training.t_max; ++epoch) {
    EpochRecord er;
    er.epoch = epoch;
    er.lr = lr_at(epoch, training);
    er.weights = active.mask(rampup_weights(epoch, training));
    er.iterations = iterations;
    optimizers.set_lr(er.lr);
    std::uint64_t fingerprint = mix_seed(static_cast<std::uint64_t>(epoch));
    for (int it = 0; it < iterations; ++it, ++global_iteration) {
      const std::uint64_t step_seed = derive_seed(training.seed, epoch, it);
      Batch batch = assemble_batch(setup.pools, training, step_seed);
      fingerprint = mix_seed(fingerprint ^ batch_fingerprint(batch));
      if (training.augment) batch = augment_batch(std::move(batch), training.augment_params,
                                                  derive_seed(step_seed, 7));
      const bool update_teachers =
          training.ema_per == EmaCadence::kIteration || it + 1 == iterations;
      IterationResult step;
      try {
        step = train_iteration(model, optimizers, batch, active, er.weights, training, step_seed,
                               update_teachers, record.audit ? &*record.audit : nullptr);
      } catch (const TrainingDiverged& e) {
        save_checkpoint(dir / "checkpoints" / "diverged.pt", model, &optimizers,
                        {epoch, global_iteration, record.config_hash});
        log::error(log::sprintf("%s seed %llu: %s (epoch %d, iteration %d)",
                                to_string(method).data(), static_cast<unsigned long long>(seed),
                                e.what(), epoch, it));
        throw;
      }
      const auto& b = step.breakdown;
      losses << epoch << ',' << it << ',' << er.lr << ',' << b.seg << ',' << b.con_intra << ','
             << b.adv_intra << ',' << b.con_inter << ',' << b.adv_inter << ',' << b.total << ','
             << b.weights.con_intra << ',' << b.weights.adv_intra << ',' << b.weights.con_inter
             << ',' << b.weights.adv_inter << '\n';
      er.mean.seg += b.seg / iterations;
      er.mean.con_intra += b.con_intra / iterations;
      er.mean.adv_intra += b.adv_intra / iterations;
      er.mean.con_inter += b.con_inter / iterations;
      er.mean.adv_inter += b.adv_inter / iterations;
      er.mean.total += b.total / iterations;
      auto add_into = [&](std::vector<double>& acc, const std::vector<double>& v) {
        if (acc.size() < v.size()) acc.resize(v.size(), 0.0);
        for (std::size_t k = 0; k < v.size(); ++k) acc[k] += v[k] / iterations;
      };
      add_into(er.d_intra, step.discriminators.intra_d);
      add_into(er.d_inter, step.discriminators.inter_d);
    }
    er.mean.weights = er.weights;
    er.batch_fingerprint = fingerprint;
    schedule << schedule_json(er).dump() << "\n";
    log::info(log::sprintf("%s seed %llu epoch %d/%d lr %.5f seg %.4f con_intra %.4f "
                           "con_inter %.4f adv_intra %.4f adv_inter %.4f",
                           to_string(method).data(), static_cast<unsigned long long>(seed), epoch,
                           training.t_max, er.lr, er.mean.seg, er.mean.con_intra,
                           er.mean.con_inter, er.mean.adv_intra, er.mean.adv_inter));
    record.epochs.push_back(std::move(er));
    if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
      save_checkpoint(dir / "checkpoints" / ("epoch-" + std::to_string(epoch) + ".pt"), model,
                      &optimizers, {epoch, global_iteration, record.config_hash});
    }
  }
  save_checkpoint(dir / "checkpoints" / "final.pt", model, &optimizers,
                  {training.t_max, global_iteration, record.config_hash});

  const auto subjects = target_test_subjects(data);
  const EvalInput input = evaluation_input(method);
  ResidualGenerator* g_s = translators ? &translators->g_s : nullptr;
  record.subjects = evaluate_subjects(model.student, g_s, subjects, input);
  record.result = aggregate(record.subjects);
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_json(dir / "record.json", to_json(record));
  log::info(log::sprintf("%s seed %llu: target Dice %s over %d subjects (%.0f s)",
                         to_string(method).data(), static_cast<unsigned long long>(seed),
                         format_mean_std(record.result.mean_dice, 100.0).c_str(),
                         record.result.subjects, record.wall_seconds));
  return record;
}

}  // namespace

std::string_view to_string(Method method) {
  for (const auto& m : kMethods) {
    if (m.method == method) return m.name;
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  for (const auto& m : kMethods) {
    if (text == m.name) return m.method;
  }
  throw InvalidInput("unknown method '" + std::string(text) + "'");
}

ActiveLosses active_losses(Method method) {
  switch (method) {
    case Method::kIntraTeacher: return {true, false, false, false};
    case Method::kInterTeacher: return {false, false, true, false};
    case Method::kDualTeacher: return {true, false, true, false};
    case Method::kDualAdversarialTeacher: return {true, true, true, true};
    default: return {};
  }
}

bool needs_translation(Method method) {
  return method != Method::kNoAdaptation && method != Method::kSupervisedUpper;
}

EvalInput evaluation_input(Method method) {
  return needs_translation(method) ? EvalInput::kTranslated : EvalInput::kRaw;
}

ExperimentData prepare_data(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  PhantomDataset pool;
  if (!config.dataset_dir.empty()) {
    for (auto& subject : load_dataset(config.dataset_dir)) {
      if (subject.slices.empty()) continue;
      const ImageKind kind = subject.slices.front().kind;
      if (kind == ImageKind::kS) pool.source.push_back(std::move(subject));
      else if (kind == ImageKind::kT) pool.target.push_back(std::move(subject));
    }
  } else {
    pool = generate_phantoms(config.phantom);
  }
  if (config.direction == Direction::kBtoA) pool = swap_domains(std::move(pool));
  ExperimentData data;
  data.subjects = std::move(pool.source);
  data.subjects.insert(data.subjects.end(), std::make_move_iterator(pool.target.begin()),
                       std::make_move_iterator(pool.target.end()));
  data.split = split_dataset(data.subjects, config.train_fraction, config.label_ratio, seed);
  for (const auto& warning : data.split.warnings) log::warn("split: " + warning);
  return data;
}

ExperimentConfig seeded_config(const ExperimentConfig& config, std::uint64_t seed) {
  ExperimentConfig out = config;
  out.seeds = {seed};
  out.segmenter.seed = derive_seed(seed, 1);
  out.translation.seed = derive_seed(seed, 2);
  out.training.seed = derive_seed(seed, 3);
  return out;
}

fs::path seed_dir(const fs::path& root, std::uint64_t seed) {
  return root / ("seed-" + std::to_string(seed));
}

Stage1Result run_stage1(const ExperimentConfig& config, const ExperimentData& data,
                        std::uint64_t seed, const fs::path& dir) {
  const ExperimentConfig cfg = seeded_config(config, seed);
  configure_runtime(cfg);
  fs::create_directories(dir);
  Stage1Result out;
  out.dir = dir;
  out.config_hash = stage1_hash(cfg, seed);
  write_json(dir / "split.json", split_to_json(data.split));

  std::ofstream log(dir / "dcam_log.jsonl", std::ios::trunc);
  auto result = train_dcam(
      data.split, data.subjects, cfg.translation,
      [&](const DcamEpochLog& l) {
        log << to_json(l).dump() << "\n" << std::flush;
        log::info(log::sprintf("stage1 seed %llu epoch %d/%d cyc %.4f gan_s %.4f gan_t %.4f "
                               "d_s %.4f d_t %.4f",
                               static_cast<unsigned long long>(seed), l.epoch,
                               cfg.translation.epochs, l.cyc, l.gan_s, l.gan_t, l.d_s, l.d_t));
      },
      dir / "translators.diverged.pt");
  out.translators = std::move(result.translators);
  out.log = std::move(result.log);
  save_translators(dir / "translators.pt", out.translators, out.config_hash);

  std::vector<ImageTensor> translated;
  out.domains = synthesize_domains(out.translators, data.split, data.subjects, &translated);
  fs::remove_all(dir / "synthetic");
  save_dataset(dir / "synthetic", group_by_subject_and_kind(translated, data.subjects));

  std::map<std::string, std::size_t> pair_counts;
  for (const auto& p : out.domains.pairs) ++pair_counts[std::string(to_string(p.kind))];
  write_json(dir / "manifest.json",
             {{"config_hash", out.config_hash},
              {"seed", seed},
              {"source_like", out.domains.source_like.size()},
              {"target_like", out.domains.target_like.size()},
              {"pairs", pair_counts},
              {"labeled_target_like", out.domains.labeled_target_like.size()},
              {"labeled_cycle_source", out.domains.labeled_cycle_source.size()},
              {"first_epoch_cyc", out.log.front().cyc},
              {"final_cyc", out.log.back().cyc},
              {"translation", to_json(cfg.translation)}});
  return out;
}

Stage1Result load_stage1(const ExperimentConfig& config, const ExperimentData& data,
                         std::uint64_t seed, const fs::path& dir) {
  const ExperimentConfig cfg = seeded_config(config, seed);
  Stage1Result out;
  out.dir = dir;
  out.config_hash = stage1_hash(cfg, seed);
  out.translators = build_translators(cfg.translation);
  load_translators(dir / "translators.pt", out.translators, out.config_hash);
  const auto translated = flatten_slices(load_dataset(dir / "synthetic"));
  const auto source = gather(data.subjects, source_train_ids(data.split));
  const auto target = gather(data.subjects, data.split.target);
  out.domains = assemble_synthetic_domains(source, target, translated, data.split.labeled_source);
  std::ifstream log(dir / "dcam_log.jsonl");
  for (std::string line; std::getline(log, line);) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    DcamEpochLog l;
    l.epoch = j.at("epoch");
    l.gan_s = j.at("gan_s");
    l.gan_t = j.at("gan_t");
    l.d_s = j.at("d_s");
    l.d_t = j.at("d_t");
    l.cyc = j.at("cyc");
    l.cyc_source = j.at("cyc_source");
    l.cyc_target = j.at("cyc_target");
    l.clamped_steps = j.at("clamped_steps");
    out.log.push_back(l);
  }
  return out;
}

nlohmann::json schedule_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"lr", r.lr},
          {"weights", to_json(r.weights)},
          {"iterations", r.iterations},
          {"batch_fingerprint", r.batch_fingerprint}};
}

nlohmann::json to_json(const EpochRecord& r) {
  auto j = schedule_json(r);
  j["losses"] = to_json(r.mean);
  j["d_intra"] = r.d_intra;
  j["d_inter"] = r.d_inter;
  return j;
}

nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) epochs.push_back(to_json(e));
  nlohmann::json subjects = nlohmann::json::array();
  for (const auto& s : r.subjects) subjects.push_back(to_json(s));
  nlohmann::json j = {{"method", std::string(to_string(r.method))},
                      {"seed", r.seed},
                      {"direction", r.direction},
                      {"config_hash", r.config_hash},
                      {"overrides", r.overrides},
                      {"epochs", epochs},
                      {"subjects", subjects},
                      {"result", to_json(r.result)},
                      {"wall_seconds", r.wall_seconds},
                      {"tags", r.tags}};
  if (r.audit) j["audit"] = to_json(*r.audit);
  return j;
}

RunRecord run_stage2(const ExperimentConfig& config, const ExperimentData& data, Method method,
                     Stage1Result* stage1, std::uint64_t seed, const fs::path& dir) {
  if (method == Method::kSupervisedUpper) {
    return run_baseline_supervised(config, data, seed, dir);
  }
  ExperimentConfig cfg = seeded_config(config, seed);
  cfg.method = std::string(to_string(method));
  cfg.validate();
  if (needs_translation(method) && (!stage1 || !stage1->translators.valid())) {
    throw InvalidInput(std::string(to_string(method)) + " needs stage-1 translators");
  }
  PoolsAndConfig setup;
  setup.training = cfg.training;
  const ActiveLosses active = active_losses(method);
  setup.pools = build_training_pools(data.split, data.subjects,
                                     needs_translation(method) ? &stage1->domains : nullptr,
                                     setup.training);
  if (!active.any()) {
    setup.pools.pairs.clear();
    setup.training.batch_unlabeled = 0;
  }
  return train_and_evaluate(cfg, data, method, std::move(setup),
                            needs_translation(method) ? &stage1->translators : nullptr, seed,
                            dir);
}

RunRecord run_baseline_supervised(const ExperimentConfig& config, const ExperimentData& data,
                                  std::uint64_t seed, const fs::path& dir) {
  ExperimentConfig cfg = seeded_config(config, seed);
  cfg.method = std::string(to_string(Method::kSupervisedUpper));
  cfg.validate();
  const auto n = data.split.target.size();
  if (n == 0) throw InvalidInput("no target training subjects");
  const auto n_labeled = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(cfg.label_ratio * static_cast<double>(n) + 1e-9)));
  const std::vector<std::string> ids(data.split.target.begin(),
                                     data.split.target.begin() + static_cast<std::ptrdiff_t>(n_labeled));
  const auto index = index_subjects(data.subjects);
  for (const auto& id : ids) {
    if (!index.at(id)->masks) throw InvalidInput("target subject " + id + " has no labels");
  }
  PoolsAndConfig setup;
  setup.training = cfg.training;
  setup.training.batch_unlabeled = 0;
  setup.pools.labeled = labeled_slices(data.subjects, ids);
  return train_and_evaluate(cfg, data, Method::kSupervisedUpper, std::move(setup), nullptr, seed,
                            dir);
}

RunRecord evaluate_checkpoint(const ExperimentConfig& config, const ExperimentData& data,
                              Method method, Stage1Result* stage1, std::uint64_t seed,
                              const fs::path& checkpoint) {
  ExperimentConfig cfg = seeded_config(config, seed);
  configure_runtime(cfg);
  if (needs_translation(method) && (!stage1 || !stage1->translators.valid())) {
    throw InvalidInput(std::string(to_string(method)) + " needs stage-1 translators");
  }
  RunRecord record;
  record.method = method;
  record.seed = seed;
  record.direction = std::string(to_string(cfg.direction));
  record.config_hash = run_config_hash(cfg, method, seed);
  record.overrides = config_overrides(cfg);
  record.dir = checkpoint.parent_path();
  if (method == Method::kSupervisedUpper) record.tags.push_back("upper_bound");
  ModelBundle model = build_model_bundle(cfg.segmenter, cfg.discriminator, cfg.training);
  load_checkpoint(checkpoint, model, nullptr, record.config_hash);
  ResidualGenerator* g_s = needs_translation(method) ? &stage1->translators.g_s : nullptr;
  record.subjects = evaluate_subjects(model.student, g_s, target_test_subjects(data),
                                      evaluation_input(method));
  record.result = aggregate(record.subjects);
  return record;
}

std::vector<Method> ablation_ladder(const ExperimentConfig& config) {
  std::vector<Method> out;
  for (const auto& name : config.ablation_methods) out.push_back(parse_method(name));
  return out;
}

AblationReport run_ablation_suite(const ExperimentConfig& config, std::span<const Method> methods,
                                  const fs::path& dir) {
  config.validate();
  AblationReport report;
  report.methods.assign(methods.begin(), methods.end());
  report.seeds = config.seeds;
  const bool any_translation =
      std::any_of(methods.begin(), methods.end(), [](Method m) { return needs_translation(m); });
  for (std::uint64_t seed : config.seeds) {
    const auto data = prepare_data(config, seed);
    const fs::path root = seed_dir(dir, seed);
    std::optional<Stage1Result> stage1;
    if (any_translation) stage1 = run_stage1(config, data, seed, root / "stage1");
    for (Method method : methods) {
      report.runs.push_back(run_stage2(config, data, method, stage1 ? &*stage1 : nullptr, seed,
                                       root / std::string(to_string(method))));
    }
  }
  write_report(dir / "report", report.runs);
  return report;
}

}  // namespace leuda
