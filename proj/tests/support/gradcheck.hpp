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

// Central finite-difference gradient checks shared by the unit and
// acceptance suites.

#ifndef LEUDA_TESTS_GRADCHECK_HPP_
#define LEUDA_TESTS_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>

#include <torch/torch.h>

namespace leuda::testing {

/// Relative error ||g_analytic - g_numeric|| / max(||g_analytic||, ||g_numeric||, floor)
/// of a scalar function of one float64 tensor.
inline double gradient_error(const std::function<torch::Tensor(const torch::Tensor&)>& f,
                             const torch::Tensor& at, double step = 1e-6, double floor = 1e-8) {
  torch::Tensor x = at.detach().to(torch::kFloat64).clone().set_requires_grad(true);
  torch::Tensor y = f(x);
  const torch::Tensor analytic = torch::autograd::grad({y}, {x})[0].detach();

  torch::Tensor base = x.detach().clone();
  torch::Tensor numeric = torch::zeros_like(base);
  auto flat = base.view(-1);
  auto num_flat = numeric.view(-1);
  torch::NoGradGuard no_grad;
  for (std::int64_t i = 0; i < flat.numel(); ++i) {
    const double orig = flat[i].item<double>();
    flat[i] = orig + step;
    const double up = f(base).item<double>();
    flat[i] = orig - step;
    const double down = f(base).item<double>();
    flat[i] = orig;
    num_flat[i] = (up - down) / (2.0 * step);
  }
  const double diff = (analytic - numeric).norm().item<double>();
  const double scale = std::max({analytic.norm().item<double>(), numeric.norm().item<double>(),
                                 floor});
  return diff / scale;
}

}  // namespace leuda::testing

#endif  // LEUDA_TESTS_GRADCHECK_HPP_
