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

// On-disk dataset directory: one raw little-endian array per subject and
// image kind (float32 images, uint8 masks, shape [slices, H, W]) plus an
// `index.json` describing shape, dtype, spacing, modality and slice ids.

#ifndef LEUDA_DATASET_IO_HPP_
#define LEUDA_DATASET_IO_HPP_

#include <filesystem>
#include <string>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "leuda/types.hpp"

namespace leuda {

inline constexpr const char* kDatasetIndexFile = "index.json";

/// Writes subjects to `dir`, creating it when missing. Every subject's slices
/// must share one ImageKind. Existing index entries are replaced.
void save_dataset(const std::filesystem::path& dir, std::span<const Subject> subjects);

/// Reads every entry of `dir`'s index.
std::vector<Subject> load_dataset(const std::filesystem::path& dir);

/// Groups translated images into per-(subject, kind) entries for
/// persistence. Subject ids are the slice-id prefix before '/'.
std::vector<Subject> group_by_subject_and_kind(std::span<const ImageTensor> images,
                                               std::span<const Subject> originals);

/// Flattens entries back to their slices.
std::vector<ImageTensor> flatten_slices(std::span<const Subject> entries);

/// Builds the source-like and target-like domains, the four pair kinds and the
/// labeled synthetic sets from original training subjects and their
/// translations (kinds S2T, S2T2S, T2S, T2S2T, matched by slice id). Labels
/// y^s are attached only for subjects in `labeled_ids`. Throws InvalidInput
/// when a translation is missing.
SyntheticDomains assemble_synthetic_domains(std::span<const Subject> source_train,
                                            std::span<const Subject> target_train,
                                            std::span<const ImageTensor> translated,
                                            std::span<const std::string> labeled_ids);

}  // namespace leuda

#endif  // LEUDA_DATASET_IO_HPP_
