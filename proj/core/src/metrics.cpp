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

#include "leuda/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace leuda {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Squared distance transform of one line, f(q) = 0 or +inf, sample spacing
// `step`. Lower envelope of parabolas over the finite samples.
void transform_line(std::vector<double>& f, double step, std::vector<int>& v,
                    std::vector<double>& z, std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    const double xq = step * q;
    while (k >= 0) {
      const double xv = step * v[k];
      const double s = ((f[q] + xq * xq) - (f[v[k]] + xv * xv)) / (2.0 * (xq - xv));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    if (k == 0) {
      z[0] = -kInf;
    } else {
      const double xv = step * v[k - 1];
      z[k] = ((f[q] + xq * xq) - (f[v[k - 1]] + xv * xv)) / (2.0 * (xq - xv));
    }
    z[k + 1] = kInf;
  }
  out.assign(n, kInf);
  if (k < 0) return;
  int j = 0;
  for (int q = 0; q < n; ++q) {
    const double xq = step * q;
    while (z[j + 1] < xq) ++j;
    const double d = xq - step * v[j];
    out[q] = d * d + f[v[j]];
  }
}

}  // namespace

LabelVolume stack_masks(std::span<const SegMask> masks) {
  if (masks.empty()) return {};
  const int h = masks.front().height();
  const int w = masks.front().width();
  LabelVolume volume(static_cast<int>(masks.size()), h, w);
  for (std::size_t z = 0; z < masks.size(); ++z) {
    if (masks[z].height() != h || masks[z].width() != w) {
      throw InvalidInput("stack_masks: slice shapes differ");
    }
    std::copy(masks[z].labels.values.begin(), masks[z].labels.values.end(),
              volume.voxels.begin() + static_cast<std::ptrdiff_t>(z * h * w));
  }
  return volume;
}

BinaryVolume binarize(const LabelVolume& labels, int cls) {
  BinaryVolume out(labels.depth, labels.height, labels.width);
  for (std::size_t i = 0; i < labels.voxels.size(); ++i) {
    out.voxels[i] = labels.voxels[i] == cls ? 1 : 0;
  }
  return out;
}

double dice(const LabelVolume& pred, const LabelVolume& gt, int cls) {
  if (!pred.same_shape(gt)) throw InvalidInput("dice: shape mismatch");
  std::size_t p = 0, g = 0, both = 0;
  for (std::size_t i = 0; i < pred.voxels.size(); ++i) {
    const bool in_p = pred.voxels[i] == cls;
    const bool in_g = gt.voxels[i] == cls;
    p += in_p;
    g += in_g;
    both += in_p && in_g;
  }
  if (p + g == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(p + g);
}

std::vector<Voxel> extract_surface(const BinaryVolume& mask, Connectivity) {
  std::vector<Voxel> surface;
  auto background = [&](int z, int y, int x) {
    if (z < 0 || y < 0 || x < 0 || z >= mask.depth || y >= mask.height ||
        x >= mask.width) {
      return true;
    }
    return mask.at(z, y, x) == 0;
  };
  for (int z = 0; z < mask.depth; ++z) {
    for (int y = 0; y < mask.height; ++y) {
      for (int x = 0; x < mask.width; ++x) {
        if (mask.at(z, y, x) == 0) continue;
        if (background(z - 1, y, x) || background(z + 1, y, x) ||
            background(z, y - 1, x) || background(z, y + 1, x) ||
            background(z, y, x - 1) || background(z, y, x + 1)) {
          surface.push_back({z, y, x});
        }
      }
    }
  }
  return surface;
}

Volume<double> distance_to(const BinaryVolume& sites, const Spacing& spacing) {
  for (double s : spacing) {
    if (!(s > 0.0)) throw InvalidInput("distance_to: spacing must be positive");
  }
  Volume<double> dist(sites.depth, sites.height, sites.width, kInf);
  for (std::size_t i = 0; i < sites.voxels.size(); ++i) {
    if (sites.voxels[i] != 0) dist.voxels[i] = 0.0;
  }
  std::vector<double> line, out, z;
  std::vector<int> v;
  // x axis
  for (int zz = 0; zz < dist.depth; ++zz) {
    for (int y = 0; y < dist.height; ++y) {
      line.assign(dist.width, 0.0);
      for (int x = 0; x < dist.width; ++x) line[x] = dist.at(zz, y, x);
      transform_line(line, spacing[2], v, z, out);
      for (int x = 0; x < dist.width; ++x) dist.at(zz, y, x) = out[x];
    }
  }
  // y axis
  for (int zz = 0; zz < dist.depth; ++zz) {
    for (int x = 0; x < dist.width; ++x) {
      line.assign(dist.height, 0.0);
      for (int y = 0; y < dist.height; ++y) line[y] = dist.at(zz, y, x);
      transform_line(line, spacing[1], v, z, out);
      for (int y = 0; y < dist.height; ++y) dist.at(zz, y, x) = out[y];
    }
  }
  // slice axis
  for (int y = 0; y < dist.height; ++y) {
    for (int x = 0; x < dist.width; ++x) {
      line.assign(dist.depth, 0.0);
      for (int zz = 0; zz < dist.depth; ++zz) line[zz] = dist.at(zz, y, x);
      transform_line(line, spacing[0], v, z, out);
      for (int zz = 0; zz < dist.depth; ++zz) dist.at(zz, y, x) = out[zz];
    }
  }
  for (double& d : dist.voxels) d = std::sqrt(d);
  return dist;
}

std::optional<double> asd(const BinaryVolume& pred, const BinaryVolume& gt,
                          const Spacing& spacing) {
  if (!pred.same_shape(gt)) throw InvalidInput("asd: shape mismatch");
  const auto pred_surface = extract_surface(pred);
  const auto gt_surface = extract_surface(gt);
  if (pred_surface.empty() || gt_surface.empty()) return std::nullopt;

  auto as_volume = [&](const std::vector<Voxel>& surface) {
    BinaryVolume v(pred.depth, pred.height, pred.width);
    for (const auto& p : surface) v.at(p.z, p.y, p.x) = 1;
    return v;
  };
  const Volume<double> to_gt = distance_to(as_volume(gt_surface), spacing);
  const Volume<double> to_pred = distance_to(as_volume(pred_surface), spacing);

  double pred_to_gt = 0.0;
  for (const auto& p : pred_surface) pred_to_gt += to_gt.at(p.z, p.y, p.x);
  double gt_to_pred = 0.0;
  for (const auto& p : gt_surface) gt_to_pred += to_pred.at(p.z, p.y, p.x);
  pred_to_gt /= static_cast<double>(pred_surface.size());
  gt_to_pred /= static_cast<double>(gt_surface.size());
  return 0.5 * (pred_to_gt + gt_to_pred);
}

SubjectResult evaluate_volume(const std::string& subject_id, const LabelVolume& pred,
                              const LabelVolume& gt, const Spacing& spacing,
                              int num_classes) {
  if (!pred.same_shape(gt)) throw InvalidInput("evaluate_volume: shape mismatch");
  SubjectResult result;
  result.subject_id = subject_id;
  for (int cls = 1; cls < num_classes; ++cls) {
    const BinaryVolume p = binarize(pred, cls);
    const BinaryVolume g = binarize(gt, cls);
    result.dice.push_back(dice(pred, gt, cls));
    result.asd.push_back(asd(p, g, spacing));
    bool present = false;
    for (auto v : g.voxels) present = present || v != 0;
    result.present.push_back(present);
  }
  return result;
}

std::optional<Summary> summarize(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  Summary s;
  s.count = static_cast<int>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= s.count;
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / s.count);
  return s;
}

AggregateResult aggregate(std::span<const SubjectResult> results) {
  if (results.empty()) throw InvalidInput("aggregate: no subject results");
  const std::size_t classes = results.front().num_foreground();
  AggregateResult out;
  out.subjects = static_cast<int>(results.size());
  std::vector<double> subject_dice, subject_asd;
  for (const auto& r : results) {
    if (r.num_foreground() != classes || r.asd.size() != classes) {
      throw InvalidInput("aggregate: inconsistent class counts");
    }
    double dsum = 0.0;
    for (double d : r.dice) dsum += d;
    subject_dice.push_back(dsum / static_cast<double>(classes));
    double asum = 0.0;
    int acount = 0;
    for (const auto& a : r.asd) {
      if (a) {
        asum += *a;
        ++acount;
      }
    }
    if (acount > 0) subject_asd.push_back(asum / acount);
  }
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> d, a;
    for (const auto& r : results) {
      d.push_back(r.dice[c]);
      if (r.asd[c]) a.push_back(*r.asd[c]);
    }
    out.dice.push_back(summarize(d));
    out.asd.push_back(summarize(a));
  }
  out.mean_dice = summarize(subject_dice);
  out.mean_asd = summarize(subject_asd);
  return out;
}

std::string format_mean_std(const std::optional<Summary>& summary, double scale,
                            int precision) {
  if (!summary) return "N/A";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f(%.*f)", precision, summary->mean * scale,
                precision, summary->std * scale);
  return buf;
}

std::string format_results_table(
    std::span<const std::pair<std::string, AggregateResult>> rows,
    std::span<const std::string> class_names) {
  std::ostringstream os;
  os << "| Method |";
  for (const auto& name : class_names) os << " Dice " << name << " |";
  os << " Dice Avg |";
  for (const auto& name : class_names) os << " ASD " << name << " |";
  os << " ASD Avg |\n|---|";
  for (std::size_t i = 0; i < 2 * class_names.size() + 2; ++i) os << "---|";
  os << "\n";
  for (const auto& [label, result] : rows) {
    os << "| " << label << " |";
    for (std::size_t c = 0; c < class_names.size(); ++c) {
      os << " " << format_mean_std(c < result.dice.size() ? result.dice[c] : std::nullopt, 100.0)
         << " |";
    }
    os << " " << format_mean_std(result.mean_dice, 100.0) << " |";
    for (std::size_t c = 0; c < class_names.size(); ++c) {
      os << " " << format_mean_std(c < result.asd.size() ? result.asd[c] : std::nullopt)
         << " |";
    }
    os << " " << format_mean_std(result.mean_asd) << " |\n";
  }
  return os.str();
}

namespace {
nlohmann::json summary_json(const std::optional<Summary>& s) {
  if (!s) return nullptr;
  return {{"mean", s->mean}, {"std", s->std}, {"count", s->count}};
}
}  // namespace

nlohmann::json to_json(const SubjectResult& result) {
  nlohmann::json asd = nlohmann::json::array();
  for (const auto& a : result.asd) asd.push_back(a ? nlohmann::json(*a) : nlohmann::json());
  return {{"subject", result.subject_id},
          {"dice", result.dice},
          {"asd", asd},
          {"present", result.present}};
}

nlohmann::json to_json(const AggregateResult& result) {
  nlohmann::json dice = nlohmann::json::array();
  nlohmann::json asd = nlohmann::json::array();
  for (const auto& s : result.dice) dice.push_back(summary_json(s));
  for (const auto& s : result.asd) asd.push_back(summary_json(s));
  return {{"subjects", result.subjects},
          {"dice", dice},
          {"asd", asd},
          {"mean_dice", summary_json(result.mean_dice)},
          {"mean_asd", summary_json(result.mean_asd)}};
}

}  // namespace leuda
