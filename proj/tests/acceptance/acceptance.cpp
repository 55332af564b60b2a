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

// Acceptance gate. Runs every criterion and prints one PASS/FAIL line each;
// the exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <torch/torch.h>

#include "gradcheck.hpp"
#include "leuda/config.hpp"
#include "leuda/ensembling.hpp"
#include "leuda/losses.hpp"
#include "leuda/metrics.hpp"
#include "leuda/networks.hpp"
#include "leuda/report.hpp"
#include "leuda/trainer.hpp"
#include "loss_cases.hpp"
#include "metric_oracles.hpp"

namespace fs = std::filesystem;
using namespace leuda;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

Outcome gradient_suite() {
  Outcome out;
  const auto start = Clock::now();
  torch::Generator g = at::detail::createCPUGenerator(1);
  int cases = 0;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& c : testing::loss_gradient_cases()) {
    for (int draw = 0; draw < 20; ++draw) {
      const auto problem = c.make(g);
      out.require(problem.input.numel() <= 5 * 8 * 8, c.name + " input too large");
      const double err = testing::gradient_error(problem.f, problem.input);
      if (!(err <= worst)) {
        worst = err;
        worst_name = c.name;
      }
      out.require(err < 1e-4, c.name + " relative error " + std::to_string(err));
    }
    ++cases;
  }
  const double elapsed = seconds_since(start);
  out.require(elapsed < 120.0, "runtime over 2 min");
  out.detail << cases << " losses x 20 draws, worst rel err " << worst << " (" << worst_name
             << "), " << elapsed << " s";
  return out;
}

Outcome closed_form_suite() {
  Outcome out;
  double ramp_err = 0.0;
  for (double l_max : {1.0, 0.1, 0.01}) {
    for (int i = 0; i <= 15000; ++i) {
      const double t = i * 0.01;
      const double phase = 1.0 - t / 150.0;
      ramp_err = std::max(ramp_err, std::abs(rampup_weight(t, 150.0, l_max) -
                                             l_max * std::exp(-5.0 * phase * phase)));
    }
  }
  out.require(ramp_err <= 1e-12, "rampup error " + std::to_string(ramp_err));

  SegmenterConfig seg;
  seg.depth = 3;
  seg.base_width = 4;
  auto student = build_segmenter(seg);
  std::vector<torch::Tensor> s_state, t_state, t0;
  torch::Generator g = at::detail::createCPUGenerator(2);
  for (const auto& p : student->parameters()) {
    s_state.push_back(p.detach().to(torch::kFloat64).clone());
    t_state.push_back(s_state.back() + torch::randn(p.sizes(), g, torch::kFloat64) + 0.5);
    t0.push_back(t_state.back().clone());
  }
  double ema_err = 0.0;
  for (int t = 1; t <= 500; ++t) {
    ema_update(std::span<torch::Tensor>(t_state), std::span<const torch::Tensor>(s_state), 0.99);
    const double expected = std::pow(0.99, t);
    for (std::size_t i = 0; i < t_state.size(); ++i) {
      const auto ratio = (t_state[i] - s_state[i]) / (t0[i] - s_state[i]);
      ema_err = std::max(ema_err, ((ratio - expected).abs().max().item<double>()) / expected);
    }
  }
  out.require(ema_err <= 1e-6, "EMA relative error " + std::to_string(ema_err));

  TrainingConfig training;
  bool lr_exact = true;
  for (int e = 0; e <= 200; ++e) {
    const double expected =
        e < training.warmup_epochs ? training.lr_peak * e / training.warmup_epochs : training.lr_peak;
    lr_exact = lr_exact && lr_at(e, training) == expected;
  }
  out.require(lr_exact, "lr_at differs from linear warm-up");
  out.detail << "rampup max err " << ramp_err << ", EMA max rel err " << ema_err
             << " over 500 updates, lr exact " << (lr_exact ? "yes" : "no");
  return out;
}

Outcome self_information_suite() {
  Outcome out;
  auto pixel = [](double a, double b) {
    return torch::tensor({a, b}, torch::kFloat64).reshape({1, 2, 1, 1});
  };
  auto check = [&](double a, double b, double ea, double eb) {
    const auto info = self_information(pixel(a, b)).flatten();
    const double da = std::abs(info[0].item<double>() - ea);
    const double db = std::abs(info[1].item<double>() - eb);
    out.require(da <= 1e-5 && db <= 1e-5, "self-information of (" + std::to_string(a) + ", " +
                                              std::to_string(b) + ")");
    return std::max(da, db);
  };
  double worst = 0.0;
  worst = std::max(worst, check(1.0, 0.0, 0.0, 0.0));
  worst = std::max(worst, check(0.5, 0.5, 0.5, 0.5));
  worst = std::max(worst, check(0.25, 0.75, 0.5, 0.31128));
  const double inter = inter_consistency(pixel(1.0, 0.0), pixel(0.5, 0.5)).item<double>();
  out.require(std::abs(inter - 0.5) <= 1e-9, "single-pixel inter consistency " +
                                                 std::to_string(inter));
  out.detail << "worst tabulated deviation " << worst << ", single-pixel inter value " << inter;
  return out;
}

Outcome metric_oracle_suite() {
  Outcome out;
  const auto start = Clock::now();
  std::mt19937_64 rng(4);
  int volumes = 0;
  double worst_asd = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto pred = testing::random_volume(rng, 4, 16, 16, 4, 0.4 + 0.005 * trial);
    const auto gt = testing::random_volume(rng, 4, 16, 16, 4, 0.5);
    const Spacing spacing{1.0 + 0.5 * (trial % 3), 1.0, 0.75 + 0.25 * (trial % 2)};
    for (int c = 1; c < 4; ++c) {
      out.require(dice(pred, gt, c) == testing::oracle_dice(pred, gt, c), "Dice mismatch");
      const auto bp = binarize(pred, c);
      const auto bg = binarize(gt, c);
      const auto got = asd(bp, bg, spacing);
      const auto want = testing::oracle_asd(bp, bg, spacing);
      out.require(got.has_value() == want.has_value(), "ASD availability mismatch");
      if (got && want) worst_asd = std::max(worst_asd, std::abs(*got - *want));
    }
    ++volumes;
  }
  out.require(worst_asd <= 1e-9, "ASD deviation " + std::to_string(worst_asd));

  LabelVolume gt(4, 16, 16);
  for (int y = 4; y < 10; ++y) gt.at(1, y, 5) = 1;
  const LabelVolume empty(4, 16, 16);
  out.require(dice(empty, gt, 1) == 0.0, "empty prediction Dice");
  out.require(!asd(binarize(empty, 1), binarize(gt, 1), {1, 1, 1}).has_value(),
              "empty prediction ASD");
  const auto result = evaluate_volume("empty", empty, gt, {1, 1, 1});
  out.require(result.dice[0] == 0.0 && !result.asd[0].has_value(), "evaluate_volume empty case");

  const double elapsed = seconds_since(start);
  out.require(elapsed < 120.0, "runtime over 2 min");
  out.detail << volumes << " volumes x 3 classes, worst ASD deviation " << worst_asd << ", "
             << elapsed << " s";
  return out;
}

Outcome discriminator_check() {
  Outcome out;
  auto d = build_discriminator(kDefaultNumClasses);
  const auto& config = d->config();
  out.require(config.channel_progression() == std::vector<int>{64, 128, 256, 512, 1},
              "channel progression");
  int in = kDefaultNumClasses;
  const std::vector<int> expected_out{64, 128, 256, 512, 1};
  auto& layers = d->layers();
  out.require(layers.size() == 5, "layer count");
  for (std::size_t l = 0; l < layers.size() && l < expected_out.size(); ++l) {
    const auto& opts = layers[l]->options;
    out.require(opts.in_channels() == in && opts.out_channels() == expected_out[l],
                "layer " + std::to_string(l + 1) + " channels");
    out.require(opts.kernel_size()->at(0) == 4 && opts.kernel_size()->at(1) == 4,
                "layer " + std::to_string(l + 1) + " kernel");
    out.require(opts.stride()->at(0) == 2 && opts.stride()->at(1) == 2,
                "layer " + std::to_string(l + 1) + " stride");
    in = expected_out[l];
  }

  // Hand arithmetic: floor((n + 2 - 4) / 2) + 1 per layer.
  auto by_hand = [](std::int64_t n) {
    std::vector<std::int64_t> sides;
    for (int l = 0; l < 5; ++l) {
      n = (n + 2 - 4) / 2 + 1;
      sides.push_back(n);
    }
    return sides;
  };
  for (std::int64_t size : {64, 256}) {
    torch::NoGradGuard no_grad;
    const auto outs = d->forward_layers(torch::rand({1, kDefaultNumClasses, size, size}));
    const auto sides = by_hand(size);
    for (std::size_t l = 0; l < outs.size(); ++l) {
      out.require(outs[l].size(2) == sides[l] && outs[l].size(3) == sides[l],
                  "layer " + std::to_string(l + 1) + " side at input " + std::to_string(size));
    }
    out.require(config.output_extent(size) == sides.back(), "output_extent");
    out.detail << size << "x" << size << " -> " << sides.back() << "x" << sides.back() << "; ";
  }
  out.require(by_hand(64).back() == 2 && by_hand(256).back() == 8, "hand oracle sides");

  // Leaky slope: recompute each hidden activation from the previous one.
  torch::NoGradGuard no_grad;
  const auto x = torch::randn({2, kDefaultNumClasses, 64, 64});
  const auto outs = d->forward_layers(x);
  torch::Tensor prev = x;
  double worst = 0.0;
  for (std::size_t l = 0; l < outs.size(); ++l) {
    const auto pre = layers[l]->forward(prev);
    const auto expected = l + 1 < outs.size() ? torch::where(pre > 0, pre, 0.2 * pre) : pre;
    worst = std::max(worst, (outs[l] - expected).abs().max().item<double>());
    prev = outs[l];
  }
  out.require(worst <= 1e-6, "activation mismatch " + std::to_string(worst));
  out.require(config.negative_slope == 0.2, "configured slope");
  out.detail << "channels 64,128,256,512,1, k4 s2, slope 0.2 (max activation deviation " << worst
             << ")";
  return out;
}

struct DeskRun {
  std::vector<RunRecord> runs;
  double seconds = 0.0;
  fs::path dir;
};

DeskRun run_desk(const ExperimentConfig& config, const fs::path& dir) {
  fs::remove_all(dir);
  DeskRun out;
  out.dir = dir;
  const auto start = Clock::now();
  const auto methods = ablation_ladder(config);
  out.runs = run_ablation_suite(config, methods, dir).runs;
  out.seconds = seconds_since(start);
  return out;
}

Outcome desk_experiment(const ExperimentConfig& config, const DeskRun& run) {
  Outcome out;
  out.require(config.phantom.n_subjects == 20, "20 subjects per domain");
  out.require(config.phantom.image_size == 64, "64x64 slices");
  out.require(config.label_ratio == 0.25, "label ratio 0.25");
  out.require(config.seeds.size() == 3, "three seeds");
  out.require(config.translation.epochs <= 40 && config.training.t_max <= 40,
              "at most 40 epochs per stage");
  for (std::uint64_t seed : config.seeds) {
    const auto le = mean_dice(run.runs, Method::kDualAdversarialTeacher, seed);
    const auto base = mean_dice(run.runs, Method::kNoAdaptation, seed);
    if (!le || !base) {
      out.require(false, "missing runs for seed " + std::to_string(seed));
      continue;
    }
    const double gain = *le - *base;
    out.detail << "seed " << seed << ": " << *le << " vs " << *base << " (gain " << gain << "); ";
    out.require(gain >= 0.15, "gain below 0.15 on seed " + std::to_string(seed));
  }
  const auto report = run.dir / "report";
  for (const char* name : {"ablation.md", "ablation.csv", "ablation.json"}) {
    out.require(fs::exists(report / name), std::string("missing report ") + name);
  }
  out.require(run.seconds <= 6 * 3600.0, "runtime over 6 h");
  out.detail << "ladder of " << ablation_ladder(config).size() << " methods, " << run.seconds
             << " s";
  return out;
}

Outcome routing_invariants(const DeskRun& run) {
  Outcome out;
  std::int64_t iterations = 0, routing = 0, isolation = 0, additivity = 0;
  double residual = 0.0;
  int audited = 0;
  for (const auto& r : run.runs) {
    if (!r.audit) continue;
    ++audited;
    iterations += r.audit->iterations;
    routing += r.audit->routing_violations;
    isolation += r.audit->isolation_violations;
    additivity += r.audit->additivity_violations;
    residual = std::max(residual, r.audit->max_additivity_residual);
  }
  out.require(audited == static_cast<int>(run.runs.size()) && audited > 0, "unaudited runs");
  out.require(iterations > 0, "no audited iterations");
  out.require(routing == 0, "routing violations");
  out.require(isolation == 0, "isolation violations");
  out.require(additivity == 0 && residual <= 1e-9, "additivity violations");
  out.detail << audited << " runs, " << iterations << " iterations, violations routing " << routing
             << " isolation " << isolation << " additivity " << additivity
             << ", max residual " << residual;
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome reproducibility(const DeskRun& first, const DeskRun& second) {
  Outcome out;
  double worst = 0.0;
  int compared = 0, identical_logs = 0;
  out.require(first.runs.size() == second.runs.size(), "run count differs");
  for (const auto& a : first.runs) {
    const auto b = mean_dice(second.runs, a.method, a.seed);
    const auto a_dice = mean_dice(first.runs, a.method, a.seed);
    if (!b || !a_dice) {
      out.require(false, "missing rerun of " + std::string(to_string(a.method)));
      continue;
    }
    worst = std::max(worst, std::abs(*a_dice - *b));
    const auto rel = fs::path(seed_dir("", a.seed)) / std::string(to_string(a.method)) /
                     "schedule.jsonl";
    const auto la = read_file(first.dir / rel);
    const auto lb = read_file(second.dir / rel);
    const bool same = !la.empty() && la == lb;
    identical_logs += same;
    out.require(same, "schedule log differs for " + rel.string());
    ++compared;
  }
  out.require(worst <= 1e-3, "mean Dice drift " + std::to_string(worst));
  out.detail << compared << " runs, max mean Dice drift " << worst << ", " << identical_logs
             << " identical schedule logs";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leuda acceptance gate"};
  std::string config_path = LEUDA_DESK_CONFIG;
  std::string work_dir = LEUDA_ACCEPTANCE_DIR;
  std::set<int> only;
  app.add_option("--config", config_path, "Desk-scale experiment config")
      ->check(CLI::ExistingFile);
  app.add_option("--work-dir", work_dir, "Directory for experiment runs");
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);
  auto selected = [&](int n) { return only.empty() || only.contains(n); };

  torch::set_num_threads(1);
  int failures = 0;
  auto report = [&](int n, const std::string& name, Outcome outcome) {
    std::cout << "criterion " << n << " " << name << ": " << (outcome.pass ? "PASS" : "FAIL")
              << " -- " << outcome.detail.str() << std::endl;
    failures += outcome.pass ? 0 : 1;
  };
  auto guarded = [&](int n, const std::string& name, const std::function<Outcome()>& body) {
    if (!selected(n)) return;
    try {
      report(n, name, body());
    } catch (const std::exception& e) {
      Outcome broken;
      broken.pass = false;
      broken.detail << "exception: " << e.what();
      report(n, name, std::move(broken));
    }
  };

  guarded(1, "gradient suite", gradient_suite);
  guarded(2, "closed-form suite", closed_form_suite);
  guarded(3, "self-information arithmetic", self_information_suite);
  guarded(4, "metric oracle suite", metric_oracle_suite);
  guarded(5, "discriminator architecture", discriminator_check);

  if (selected(6) || selected(7) || selected(8)) {
    std::optional<ExperimentConfig> config;
    std::optional<DeskRun> first;
    std::string error;
    try {
      config = load_config(config_path);
      config->audit = true;
      config->log_level = "warn";
      first = run_desk(*config, fs::path(work_dir) / "run-1");
    } catch (const std::exception& e) {
      error = e.what();
    }
    auto need_first = [&]() -> const DeskRun& {
      if (!first) throw std::runtime_error("desk experiment failed: " + error);
      return *first;
    };
    guarded(6, "desk-scale experiment", [&] { return desk_experiment(*config, need_first()); });
    guarded(7, "routing and isolation invariants",
            [&] { return routing_invariants(need_first()); });
    guarded(8, "reproducibility", [&] {
      const auto& a = need_first();
      const auto b = run_desk(*config, fs::path(work_dir) / "run-2");
      return reproducibility(a, b);
    });
  }

  std::cout << (failures == 0 ? "all selected criteria passed" : "some criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
