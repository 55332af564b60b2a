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

#include "leuda/evaluation.hpp"

#include <algorithm>

#include "leuda/tensor_utils.hpp"

namespace leuda {

std::vector<SegMask> predict_masks(Segmenter& segmenter, std::span<const ImageTensor> slices,
                                   int batch_size) {
  torch::NoGradGuard no_grad;
  const bool was_training = segmenter->is_training();
  segmenter->eval();
  std::vector<SegMask> out;
  out.reserve(slices.size());
  for (std::size_t begin = 0; begin < slices.size(); begin += batch_size) {
    const std::size_t end = std::min(slices.size(), begin + batch_size);
    const auto logits =
        segmenter->forward(images_to_tensor(slices.subspan(begin, end - begin))).main().logits;
    for (std::int64_t b = 0; b < logits.size(0); ++b) out.push_back(argmax_mask(logits[b]));
  }
  segmenter->train(was_training);
  return out;
}

SubjectResult evaluate_subject(Segmenter& segmenter, ResidualGenerator* translator,
                               const Subject& subject, EvalInput input) {
  if (!subject.masks) throw InvalidInput("evaluate_subject: subject " + subject.id + " has no masks");
  std::vector<SegMask> pred;
  if (input == EvalInput::kTranslated) {
    if (!translator || translator->is_empty()) {
      throw InvalidInput("evaluate_subject: translated evaluation needs a translator");
    }
    const auto translated = translate(*translator, subject.slices, ImageKind::kT2S);
    pred = predict_masks(segmenter, translated);
  } else {
    pred = predict_masks(segmenter, subject.slices);
  }
  return evaluate_volume(subject.id, stack_masks(pred), stack_masks(*subject.masks),
                         subject.spacing, segmenter->config().num_classes);
}

SubjectResult evaluate_target_subject(ModelBundle& model, const Subject& subject,
                                      EvalInput input) {
  ResidualGenerator* g_s = model.translators.g_s.is_empty() ? nullptr : &model.translators.g_s;
  return evaluate_subject(model.student, g_s, subject, input);
}

std::vector<SubjectResult> evaluate_subjects(Segmenter& segmenter,
                                             ResidualGenerator* translator,
                                             std::span<const Subject* const> subjects,
                                             EvalInput input) {
  std::vector<SubjectResult> out;
  for (const Subject* s : subjects) out.push_back(evaluate_subject(segmenter, translator, *s, input));
  return out;
}

}  // namespace leuda
