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

// Ablation comparison report: markdown tables, a per-subject CSV, a JSON
// summary and static SVG charts of per-subject Dice.

#ifndef LEUDA_REPORT_HPP_
#define LEUDA_REPORT_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leuda/trainer.hpp"

namespace leuda {

/// Display names of the foreground phantom labels 1..4.
std::vector<std::string> class_names(int num_classes = kDefaultNumClasses);

/// Rebuilds the method, seed, direction, hash, tags and per-subject results
/// of a record.json document; the aggregate is recomputed from the subjects.
RunRecord run_record_from_json(const nlohmann::json& j);

/// Every record.json below `root`, sorted by path.
std::vector<RunRecord> load_run_records(const std::filesystem::path& root);

/// Mean over subjects of the class-averaged Dice of the run for
/// (`method`, `seed`); nullopt when absent.
std::optional<double> mean_dice(std::span<const RunRecord> runs, Method method,
                                std::uint64_t seed);

/// Method rows in first-seen order, each aggregating every seed's subjects.
std::vector<std::pair<std::string, AggregateResult>> pooled_rows(
    std::span<const RunRecord> runs);

std::string render_markdown(std::span<const RunRecord> runs);
std::string render_csv(std::span<const RunRecord> runs);
nlohmann::json render_json(std::span<const RunRecord> runs);
/// Bar chart of mean Dice per method with one bar group per seed.
std::string render_dice_bar_svg(std::span<const RunRecord> runs);
/// Box plot of per-subject mean Dice per method, seeds pooled.
std::string render_dice_box_svg(std::span<const RunRecord> runs);

/// Writes ablation.md, ablation.csv, ablation.json, dice_bar.svg and
/// dice_box.svg into `dir`.
void write_report(const std::filesystem::path& dir, std::span<const RunRecord> runs);

}  // namespace leuda

#endif  // LEUDA_REPORT_HPP_
