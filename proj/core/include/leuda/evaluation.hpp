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

// Test-time protocol: target slices are optionally translated to source
// style, segmented by the student's main head and stacked into a volume for
// subject-level metrics.

#ifndef LEUDA_EVALUATION_HPP_
#define LEUDA_EVALUATION_HPP_

#include <span>
#include <vector>

#include "leuda/ensembling.hpp"
#include "leuda/metrics.hpp"
#include "leuda/networks.hpp"
#include "leuda/translation.hpp"
#include "leuda/types.hpp"

namespace leuda {

enum class EvalInput : std::uint8_t {
  /// Segment G_s(x^t).
  kTranslated,
  /// Segment x^t directly.
  kRaw,
};

/// Argmax of the level-1 prediction for every slice.
std::vector<SegMask> predict_masks(Segmenter& segmenter, std::span<const ImageTensor> slices,
                                   int batch_size = 32);

/// Metrics of one labeled subject. `translator` must be set for kTranslated.
SubjectResult evaluate_subject(Segmenter& segmenter, ResidualGenerator* translator,
                               const Subject& subject, EvalInput input);

/// Student of `model` on a target subject; kTranslated uses model.translators.g_s
/// and throws InvalidInput when it is missing.
SubjectResult evaluate_target_subject(ModelBundle& model, const Subject& subject,
                                      EvalInput input = EvalInput::kTranslated);

std::vector<SubjectResult> evaluate_subjects(Segmenter& segmenter,
                                             ResidualGenerator* translator,
                                             std::span<const Subject* const> subjects,
                                             EvalInput input);

}  // namespace leuda

#endif  // LEUDA_EVALUATION_HPP_
