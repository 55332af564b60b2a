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

// Independent metric oracles: plain voxel counting and exhaustive pairwise
// surface distances.

#ifndef LEUDA_TESTS_METRIC_ORACLES_HPP_
#define LEUDA_TESTS_METRIC_ORACLES_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "leuda/metrics.hpp"

namespace leuda::testing {

inline LabelVolume random_volume(std::mt19937_64& rng, int d, int h, int w, int classes, double p_bg) {
  LabelVolume v(d, h, w);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> cls(1, classes - 1);
  for (auto& x : v.voxels) x = u(rng) < p_bg ? 0 : static_cast<std::uint8_t>(cls(rng));
  return v;
}

inline double oracle_dice(const LabelVolume& p, const LabelVolume& g, int c) {
  long both = 0, np = 0, ng = 0;
  for (std::size_t i = 0; i < p.voxels.size(); ++i) {
    const bool a = p.voxels[i] == c, b = g.voxels[i] == c;
    both += a && b;
    np += a;
    ng += b;
  }
  if (np + ng == 0) return 1.0;
  return 2.0 * both / static_cast<double>(np + ng);
}

inline std::vector<std::array<int, 3>> oracle_surface(const BinaryVolume& m) {
  std::vector<std::array<int, 3>> out;
  auto fg = [&](int z, int y, int x) {
    if (z < 0 || y < 0 || x < 0 || z >= m.depth || y >= m.height || x >= m.width) return false;
    return m.at(z, y, x) != 0;
  };
  for (int z = 0; z < m.depth; ++z) {
    for (int y = 0; y < m.height; ++y) {
      for (int x = 0; x < m.width; ++x) {
        if (!fg(z, y, x)) continue;
        if (!fg(z - 1, y, x) || !fg(z + 1, y, x) || !fg(z, y - 1, x) || !fg(z, y + 1, x) ||
            !fg(z, y, x - 1) || !fg(z, y, x + 1)) {
          out.push_back({z, y, x});
        }
      }
    }
  }
  return out;
}

inline std::optional<double> oracle_asd(const BinaryVolume& p, const BinaryVolume& g, const Spacing& s) {
  const auto sp = oracle_surface(p), sg = oracle_surface(g);
  if (sp.empty() || sg.empty()) return std::nullopt;
  auto directed = [&](const auto& from, const auto& to) {
    double total = 0.0;
    for (const auto& a : from) {
      double best = INFINITY;
      for (const auto& b : to) {
        const double dz = (a[0] - b[0]) * s[0], dy = (a[1] - b[1]) * s[1],
                     dx = (a[2] - b[2]) * s[2];
        best = std::min(best, std::sqrt(dz * dz + dy * dy + dx * dx));
      }
      total += best;
    }
    return total / static_cast<double>(from.size());
  };
  return 0.5 * (directed(sp, sg) + directed(sg, sp));
}

}  // namespace leuda::testing

#endif  // LEUDA_TESTS_METRIC_ORACLES_HPP_
