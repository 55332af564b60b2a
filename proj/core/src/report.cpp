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

#include "leuda/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "leuda/log.hpp"

namespace leuda {
namespace fs = std::filesystem;
namespace {

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                                    "#59a14f", "#edc948", "#b07aa1", "#9c755f"};

double subject_mean(const SubjectResult& r) {
  if (r.dice.empty()) return 0.0;
  double sum = 0.0;
  for (double d : r.dice) sum += d;
  return sum / static_cast<double>(r.dice.size());
}

std::vector<Method> methods_in_order(std::span<const RunRecord> runs) {
  std::vector<Method> out;
  for (const auto& r : runs) {
    if (std::find(out.begin(), out.end(), r.method) == out.end()) out.push_back(r.method);
  }
  return out;
}

std::vector<std::uint64_t> seeds_in_order(std::span<const RunRecord> runs) {
  std::vector<std::uint64_t> out;
  for (const auto& r : runs) {
    if (std::find(out.begin(), out.end(), r.seed) == out.end()) out.push_back(r.seed);
  }
  return out;
}

std::string method_label(const RunRecord& r) {
  std::string label(to_string(r.method));
  if (std::find(r.tags.begin(), r.tags.end(), "upper_bound") != r.tags.end()) {
    label += " (upper bound)";
  }
  return label;
}

std::string method_label(std::span<const RunRecord> runs, Method m) {
  for (const auto& r : runs) {
    if (r.method == m) return method_label(r);
  }
  return std::string(to_string(m));
}

std::string svg_header(int width, int height) {
  return log::sprintf(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
      "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n",
      width, height, width, height, width, height);
}

// Dice axis shared by both charts: [0, 1] mapped onto [top, bottom].
struct Axis {
  double top = 30.0;
  double bottom = 250.0;
  double left = 60.0;

  double y(double value) const { return bottom - std::clamp(value, 0.0, 1.0) * (bottom - top); }

  std::string draw(double right) const {
    std::string out;
    for (int i = 0; i <= 5; ++i) {
      const double v = i / 5.0;
      out += log::sprintf(
          "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>\n"
          "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.1f</text>\n",
          left, y(v), right, y(v), left - 6, y(v) + 4, v);
    }
    out += log::sprintf("<text x=\"14\" y=\"%.1f\" transform=\"rotate(-90 14 %.1f)\" "
                       "text-anchor=\"middle\">mean Dice</text>\n",
                       (top + bottom) / 2, (top + bottom) / 2);
    return out;
  }
};

double quantile(std::vector<double> sorted, double q) {
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string rotated_label(double x, double y, const std::string& text) {
  return log::sprintf("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" "
                      "transform=\"rotate(-35 %.1f %.1f)\">%s</text>\n",
                      x, y, x, y, xml_escape(text).c_str());
}

}  // namespace

std::vector<std::string> class_names(int num_classes) {
  static const std::vector<std::string> names = {"MYO", "LVC", "LAC", "AA"};
  std::vector<std::string> out;
  for (int c = 1; c < num_classes; ++c) {
    out.push_back(c <= static_cast<int>(names.size()) ? names[c - 1]
                                                       : "class" + std::to_string(c));
  }
  return out;
}

RunRecord run_record_from_json(const nlohmann::json& j) {
  RunRecord r;
  r.method = parse_method(j.at("method").get<std::string>());
  r.seed = j.at("seed").get<std::uint64_t>();
  r.direction = j.value("direction", "");
  r.config_hash = j.value("config_hash", "");
  r.overrides = j.value("overrides", nlohmann::json::object());
  r.wall_seconds = j.value("wall_seconds", 0.0);
  r.tags = j.value("tags", std::vector<std::string>{});
  for (const auto& s : j.at("subjects")) {
    SubjectResult sr;
    sr.subject_id = s.at("subject").get<std::string>();
    sr.dice = s.at("dice").get<std::vector<double>>();
    for (const auto& a : s.at("asd")) {
      sr.asd.push_back(a.is_null() ? std::nullopt : std::optional<double>(a.get<double>()));
    }
    sr.present = s.at("present").get<std::vector<bool>>();
    r.subjects.push_back(std::move(sr));
  }
  r.result = aggregate(r.subjects);
  return r;
}

std::vector<RunRecord> load_run_records(const fs::path& root) {
  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "record.json") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<RunRecord> out;
  for (const auto& p : paths) {
    std::ifstream in(p);
    auto r = run_record_from_json(nlohmann::json::parse(in));
    r.dir = p.parent_path();
    out.push_back(std::move(r));
  }
  return out;
}

std::optional<double> mean_dice(std::span<const RunRecord> runs, Method method,
                                std::uint64_t seed) {
  for (const auto& r : runs) {
    if (r.method == method && r.seed == seed && r.result.mean_dice) {
      return r.result.mean_dice->mean;
    }
  }
  return std::nullopt;
}

std::vector<std::pair<std::string, AggregateResult>> pooled_rows(
    std::span<const RunRecord> runs) {
  std::vector<std::pair<std::string, AggregateResult>> rows;
  for (Method m : methods_in_order(runs)) {
    std::vector<SubjectResult> pooled;
    for (const auto& r : runs) {
      if (r.method == m) pooled.insert(pooled.end(), r.subjects.begin(), r.subjects.end());
    }
    if (!pooled.empty()) rows.emplace_back(method_label(runs, m), aggregate(pooled));
  }
  return rows;
}

std::string render_markdown(std::span<const RunRecord> runs) {
  if (runs.empty()) return "# Ablation report\n\nNo runs.\n";
  const auto methods = methods_in_order(runs);
  const auto seeds = seeds_in_order(runs);
  const int classes = static_cast<int>(runs.front().result.dice.size()) + 1;
  std::ostringstream os;
  os << "# Ablation report\n\n";
  os << "Target test subjects, every seed pooled. Dice in percent, ASD in voxel "
        "spacing units, mean(std) over subjects.\n\n";
  const auto rows = pooled_rows(runs);
  os << format_results_table(rows, class_names(classes)) << "\n";

  os << "## Mean Dice per seed\n\n| Method |";
  for (auto s : seeds) os << " seed " << s << " |";
  os << " mean |\n|---|";
  for (std::size_t i = 0; i <= seeds.size(); ++i) os << "---|";
  os << "\n";
  for (Method m : methods) {
    os << "| " << method_label(runs, m) << " |";
    double sum = 0.0;
    int n = 0;
    for (auto s : seeds) {
      const auto d = mean_dice(runs, m, s);
      os << ' ' << (d ? log::sprintf("%.1f", *d * 100.0) : "N/A") << " |";
      if (d) {
        sum += *d;
        ++n;
      }
    }
    os << ' ' << (n ? log::sprintf("%.1f", sum / n * 100.0) : "N/A") << " |\n";
  }

  const bool has_pair =
      std::find(methods.begin(), methods.end(), Method::kNoAdaptation) != methods.end() &&
      std::find(methods.begin(), methods.end(), Method::kDualAdversarialTeacher) !=
          methods.end();
  if (has_pair) {
    os << "\n## Gain of dual_adversarial_teacher over no_adaptation\n\n"
          "| Seed | gain (Dice, absolute) |\n|---|---|\n";
    for (auto s : seeds) {
      const auto a = mean_dice(runs, Method::kDualAdversarialTeacher, s);
      const auto b = mean_dice(runs, Method::kNoAdaptation, s);
      os << "| " << s << " | "
         << (a && b ? log::sprintf("%+.4f", *a - *b) : std::string("N/A")) << " |\n";
    }
  }

  os << "\n## Runs\n\n| Method | Seed | Direction | Config hash | Wall time (s) |\n"
        "|---|---|---|---|---|\n";
  for (const auto& r : runs) {
    os << "| " << method_label(r) << " | " << r.seed << " | " << r.direction << " | "
       << r.config_hash << " | " << log::sprintf("%.0f", r.wall_seconds) << " |\n";
  }
  return os.str();
}

std::string render_csv(std::span<const RunRecord> runs) {
  std::ostringstream os;
  os << "method,seed,subject,class,dice,asd\n";
  os.precision(10);
  for (const auto& r : runs) {
    const auto names = class_names(static_cast<int>(r.result.dice.size()) + 1);
    for (const auto& s : r.subjects) {
      for (std::size_t c = 0; c < s.dice.size(); ++c) {
        os << to_string(r.method) << ',' << r.seed << ',' << s.subject_id << ',' << names[c]
           << ',' << s.dice[c] << ',';
        if (s.asd[c]) os << *s.asd[c];
        else os << "NA";
        os << '\n';
      }
    }
  }
  return os.str();
}

nlohmann::json render_json(std::span<const RunRecord> runs) {
  nlohmann::json out;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : runs) {
    list.push_back({{"method", std::string(to_string(r.method))},
                    {"seed", r.seed},
                    {"direction", r.direction},
                    {"config_hash", r.config_hash},
                    {"tags", r.tags},
                    {"wall_seconds", r.wall_seconds},
                    {"result", to_json(r.result)}});
  }
  out["runs"] = list;
  nlohmann::json pooled = nlohmann::json::object();
  for (const auto& [label, agg] : pooled_rows(runs)) pooled[label] = to_json(agg);
  out["pooled"] = pooled;
  nlohmann::json gains = nlohmann::json::object();
  for (auto s : seeds_in_order(runs)) {
    const auto a = mean_dice(runs, Method::kDualAdversarialTeacher, s);
    const auto b = mean_dice(runs, Method::kNoAdaptation, s);
    if (a && b) gains[std::to_string(s)] = *a - *b;
  }
  out["gain_over_no_adaptation"] = gains;
  return out;
}

std::string render_dice_bar_svg(std::span<const RunRecord> runs) {
  const auto methods = methods_in_order(runs);
  const auto seeds = seeds_in_order(runs);
  const double group = 90.0;
  const double bar = std::max(6.0, (group - 20.0) / std::max<std::size_t>(1, seeds.size()));
  const int width = static_cast<int>(80 + group * methods.size() + 20);
  const int height = 330;
  Axis axis;
  std::string out = svg_header(width, height);
  out += axis.draw(width - 20.0);
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const double x0 = axis.left + 10 + group * static_cast<double>(mi);
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const auto d = mean_dice(runs, methods[mi], seeds[si]);
      if (!d) continue;
      const double x = x0 + bar * static_cast<double>(si);
      out += log::sprintf("<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                          "fill=\"%s\"><title>seed %llu: %.4f</title></rect>\n",
                          x, axis.y(*d), bar - 1, axis.bottom - axis.y(*d),
                          kPalette[si % std::size(kPalette)],
                          static_cast<unsigned long long>(seeds[si]), *d);
    }
    const double cx = x0 + (group - 20.0) / 2;
    out += rotated_label(cx, axis.bottom + 14, std::string(to_string(methods[mi])));
  }
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    out += log::sprintf("<rect x=\"%.1f\" y=\"8\" width=\"10\" height=\"10\" fill=\"%s\"/>"
                        "<text x=\"%.1f\" y=\"17\">seed %llu</text>\n",
                        axis.left + 70.0 * static_cast<double>(si),
                        kPalette[si % std::size(kPalette)],
                        axis.left + 14 + 70.0 * static_cast<double>(si),
                        static_cast<unsigned long long>(seeds[si]));
  }
  out += "</svg>\n";
  return out;
}

std::string render_dice_box_svg(std::span<const RunRecord> runs) {
  const auto methods = methods_in_order(runs);
  const double group = 90.0;
  const int width = static_cast<int>(80 + group * methods.size() + 20);
  const int height = 330;
  Axis axis;
  std::string out = svg_header(width, height);
  out += axis.draw(width - 20.0);
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    std::vector<double> values;
    for (const auto& r : runs) {
      if (r.method != methods[mi]) continue;
      for (const auto& s : r.subjects) values.push_back(subject_mean(s));
    }
    if (values.empty()) continue;
    const double q1 = quantile(values, 0.25), med = quantile(values, 0.5),
                 q3 = quantile(values, 0.75);
    const double lo = *std::min_element(values.begin(), values.end());
    const double hi = *std::max_element(values.begin(), values.end());
    const double x = axis.left + 20 + group * static_cast<double>(mi);
    const double w = group - 40.0;
    const double cx = x + w / 2;
    const char* color = kPalette[mi % std::size(kPalette)];
    out += log::sprintf(
        "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#333\"/>\n",
        cx, axis.y(hi), cx, axis.y(lo));
    out += log::sprintf(
        "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"%s\" "
        "fill-opacity=\"0.6\" stroke=\"#333\"/>\n",
        x, axis.y(q3), w, std::max(1.0, axis.y(q1) - axis.y(q3)), color);
    out += log::sprintf(
        "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#000\" "
        "stroke-width=\"2\"/>\n",
        x, axis.y(med), x + w, axis.y(med));
    for (double v : values) {
      out += log::sprintf("<circle cx=\"%.1f\" cy=\"%.1f\" r=\"2\" fill=\"#222\"/>\n", cx,
                         axis.y(v));
    }
    out += rotated_label(cx, axis.bottom + 14, std::string(to_string(methods[mi])));
  }
  out += "</svg>\n";
  return out;
}

void write_report(const fs::path& dir, std::span<const RunRecord> runs) {
  fs::create_directories(dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::trunc);
    out << text;
  };
  write("ablation.md", render_markdown(runs));
  write("ablation.csv", render_csv(runs));
  write("ablation.json", render_json(runs).dump(2) + "\n");
  write("dice_bar.svg", render_dice_bar_svg(runs));
  write("dice_box.svg", render_dice_box_svg(runs));
}

}  // namespace leuda
