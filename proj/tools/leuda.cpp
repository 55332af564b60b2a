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

// Command-line driver: stage1 | stage2 | ablate | evaluate | report.
//
// Configuration layers, later wins: built-in defaults, --config file,
// LEUDA_<KEY> environment variables, --set key=value, dedicated flags.
// Run directories are laid out as <out>/seed-<n>/{stage1,<method>}.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "leuda/config.hpp"
#include "leuda/report.hpp"
#include "leuda/trainer.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string direction;
  std::optional<double> label_ratio;
  std::string method;
  std::string out = "runs";
  std::vector<std::string> sets;
  std::string checkpoint;
};

leuda::ExperimentConfig resolve_config(const Options& o) {
  leuda::ExperimentConfig config =
      o.config.empty() ? leuda::ExperimentConfig{} : leuda::load_config(o.config);
  leuda::apply_env_overrides(config);
  if (!o.sets.empty()) {
    nlohmann::json patch = leuda::to_flat_json(config);
    for (const auto& kv : o.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw leuda::InvalidInput("--set expects key=value: " + kv);
      const std::string key = kv.substr(0, eq);
      const std::string raw = kv.substr(eq + 1);
      if (!patch.contains(key)) throw leuda::InvalidInput("unknown config key '" + key + "'");
      if (patch[key].is_string()) {
        patch[key] = raw;
      } else {
        try {
          patch[key] = nlohmann::json::parse(raw);
        } catch (const nlohmann::json::parse_error&) {
          throw leuda::InvalidInput("cannot parse value for '" + key + "': " + raw);
        }
      }
    }
    config = leuda::from_flat_json(patch);
  }
  if (!o.seeds.empty()) config.seeds = o.seeds;
  if (!o.direction.empty()) config.direction = leuda::parse_direction(o.direction);
  if (o.label_ratio) config.label_ratio = *o.label_ratio;
  if (!o.method.empty()) config.method = o.method;
  config.validate();
  return config;
}

fs::path stage1_dir(const Options& o, std::uint64_t seed) {
  return leuda::seed_dir(o.out, seed) / "stage1";
}

int cmd_stage1(const Options& o) {
  const auto config = resolve_config(o);
  for (auto seed : config.seeds) {
    const auto data = leuda::prepare_data(config, seed);
    const auto result = leuda::run_stage1(config, data, seed, stage1_dir(o, seed));
    std::cout << "stage1 seed " << seed << ": L_cyc " << result.log.front().cyc << " -> "
              << result.log.back().cyc << ", artifacts in " << result.dir.string() << "\n";
  }
  return 0;
}

int cmd_stage2(const Options& o) {
  const auto config = resolve_config(o);
  const auto method = leuda::parse_method(config.method);
  std::vector<leuda::RunRecord> runs;
  for (auto seed : config.seeds) {
    const auto data = leuda::prepare_data(config, seed);
    std::optional<leuda::Stage1Result> stage1;
    if (leuda::needs_translation(method)) {
      stage1 = leuda::load_stage1(config, data, seed, stage1_dir(o, seed));
    }
    runs.push_back(leuda::run_stage2(config, data, method, stage1 ? &*stage1 : nullptr, seed,
                                     leuda::seed_dir(o.out, seed) /
                                         std::string(leuda::to_string(method))));
  }
  std::cout << leuda::render_markdown(runs);
  return 0;
}

int cmd_ablate(const Options& o) {
  const auto config = resolve_config(o);
  const auto methods = leuda::ablation_ladder(config);
  const auto report = leuda::run_ablation_suite(config, methods, o.out);
  std::cout << leuda::render_markdown(report.runs);
  return 0;
}

int cmd_evaluate(const Options& o) {
  const auto config = resolve_config(o);
  const auto method = leuda::parse_method(config.method);
  std::vector<leuda::RunRecord> runs;
  for (auto seed : config.seeds) {
    const auto data = leuda::prepare_data(config, seed);
    std::optional<leuda::Stage1Result> stage1;
    if (leuda::needs_translation(method)) {
      stage1 = leuda::load_stage1(config, data, seed, stage1_dir(o, seed));
    }
    const fs::path checkpoint =
        o.checkpoint.empty() ? leuda::seed_dir(o.out, seed) /
                                   std::string(leuda::to_string(method)) / "checkpoints" /
                                   "final.pt"
                             : fs::path(o.checkpoint);
    runs.push_back(leuda::evaluate_checkpoint(config, data, method, stage1 ? &*stage1 : nullptr,
                                              seed, checkpoint));
  }
  std::cout << leuda::render_markdown(runs);
  return 0;
}

int cmd_report(const Options& o) {
  const auto runs = leuda::load_run_records(o.out);
  if (runs.empty()) {
    std::cerr << "no record.json found under " << o.out << "\n";
    return 1;
  }
  leuda::write_report(fs::path(o.out) / "report", runs);
  std::cout << leuda::render_markdown(runs);
  return 0;
}

void add_common(CLI::App* app, Options& o, bool with_method) {
  app->add_option("--config", o.config, "Flat JSON config file")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seeds, "Seed; repeat for several (overrides config seeds)");
  app->add_option("--direction", o.direction, "a2b or b2a")
      ->check(CLI::IsMember({"a2b", "b2a"}));
  app->add_option("--label-ratio", o.label_ratio, "Source label ratio")
      ->check(CLI::Range(0.0, 1.0));
  if (with_method) app->add_option("--method", o.method, "Training method");
  app->add_option("--out", o.out, "Output root directory");
  app->add_option("--set", o.sets, "Override a config key, key=value");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leuda: label-efficient unsupervised domain adaptation for 2D segmentation"};
  app.require_subcommand(1);
  Options o;

  auto* stage1 = app.add_subcommand("stage1", "Train translators and write synthetic domains");
  add_common(stage1, o, false);
  auto* stage2 = app.add_subcommand("stage2", "Train and evaluate one method");
  add_common(stage2, o, true);
  auto* ablate = app.add_subcommand("ablate", "Run stage 1 and the ablation ladder per seed");
  add_common(ablate, o, false);
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a stage-2 checkpoint");
  add_common(evaluate, o, true);
  evaluate->add_option("--checkpoint", o.checkpoint,
                       "Checkpoint file (default <out>/seed-<n>/<method>/checkpoints/final.pt)");
  auto* report = app.add_subcommand("report", "Rebuild the comparison report from run records");
  report->add_option("--out", o.out, "Root directory holding run records");

  CLI11_PARSE(app, argc, argv);
  try {
    if (stage1->parsed()) return cmd_stage1(o);
    if (stage2->parsed()) return cmd_stage2(o);
    if (ablate->parsed()) return cmd_ablate(o);
    if (evaluate->parsed()) return cmd_evaluate(o);
    if (report->parsed()) return cmd_report(o);
  } catch (const leuda::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
