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

#include "leuda/dataset_io.hpp"

#include <fstream>
#include <map>
#include <set>

namespace leuda {
namespace fs = std::filesystem;
namespace {

std::string entry_stem(const Subject& subject) {
  return subject.id + "." + std::string(to_string(subject.slices.front().kind));
}

template <typename T>
void write_raw(const fs::path& path, const std::vector<T>& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(T)));
}

template <typename T>
std::vector<T> read_raw(const fs::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<T> data(count);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(count * sizeof(T)));
  if (in.gcount() != static_cast<std::streamsize>(count * sizeof(T))) {
    throw std::runtime_error("truncated array " + path.string());
  }
  return data;
}

std::string subject_of(const std::string& slice_id) {
  return slice_id.substr(0, slice_id.find('/'));
}

}  // namespace

void save_dataset(const fs::path& dir, std::span<const Subject> subjects) {
  fs::create_directories(dir);
  nlohmann::json index;
  const fs::path index_path = dir / kDatasetIndexFile;
  if (fs::exists(index_path)) {
    std::ifstream in(index_path);
    index = nlohmann::json::parse(in);
  } else {
    index = {{"format", "leuda-dataset"}, {"version", 1},
             {"entries", nlohmann::json::array()}};
  }
  auto& entries = index["entries"];
  for (const auto& subject : subjects) {
    if (subject.slices.empty()) continue;
    const ImageKind kind = subject.slices.front().kind;
    const int h = subject.slices.front().height();
    const int w = subject.slices.front().width();
    std::vector<float> pixels;
    std::vector<std::string> slice_ids;
    for (const auto& slice : subject.slices) {
      if (slice.kind != kind) throw InvalidInput("save_dataset: mixed kinds in " + subject.id);
      if (slice.height() != h || slice.width() != w) {
        throw InvalidInput("save_dataset: mixed slice shapes in " + subject.id);
      }
      pixels.insert(pixels.end(), slice.pixels.values.begin(), slice.pixels.values.end());
      slice_ids.push_back(slice.slice_id);
    }
    const std::string stem = entry_stem(subject);
    write_raw(dir / (stem + ".f32"), pixels);
    nlohmann::json entry{
        {"id", subject.id},
        {"domain", to_string(subject.domain)},
        {"modality", subject.modality},
        {"kind", to_string(kind)},
        {"shape", {subject.slices.size(), h, w}},
        {"dtype", "float32"},
        {"spacing", subject.spacing},
        {"image_file", stem + ".f32"},
        {"mask_file", nullptr},
        {"slice_ids", slice_ids},
    };
    if (subject.masks) {
      std::vector<std::uint8_t> labels;
      for (const auto& mask : *subject.masks) {
        labels.insert(labels.end(), mask.labels.values.begin(), mask.labels.values.end());
      }
      write_raw(dir / (stem + ".u8"), labels);
      entry["mask_file"] = stem + ".u8";
      entry["mask_dtype"] = "uint8";
    }
    // Replace any entry with the same file stem.
    for (auto it = entries.begin(); it != entries.end();) {
      if ((*it)["image_file"] == entry["image_file"]) {
        it = entries.erase(it);
      } else {
        ++it;
      }
    }
    entries.push_back(std::move(entry));
  }
  std::ofstream out(index_path, std::ios::trunc);
  out << index.dump(2) << "\n";
}

std::vector<Subject> load_dataset(const fs::path& dir) {
  std::ifstream in(dir / kDatasetIndexFile);
  if (!in) throw InvalidInput("no dataset index in " + dir.string());
  const auto index = nlohmann::json::parse(in);
  std::vector<Subject> subjects;
  for (const auto& entry : index.at("entries")) {
    Subject subject;
    subject.id = entry.at("id").get<std::string>();
    subject.domain = parse_domain(entry.at("domain").get<std::string>());
    subject.modality = entry.value("modality", "");
    subject.spacing = entry.at("spacing").get<std::array<double, 3>>();
    const ImageKind kind = parse_image_kind(entry.at("kind").get<std::string>());
    const auto shape = entry.at("shape").get<std::array<int, 3>>();
    const auto slice_ids = entry.at("slice_ids").get<std::vector<std::string>>();
    const std::size_t plane = static_cast<std::size_t>(shape[1]) * shape[2];
    const auto pixels =
        read_raw<float>(dir / entry.at("image_file").get<std::string>(), plane * shape[0]);
    std::vector<std::uint8_t> labels;
    if (!entry.at("mask_file").is_null()) {
      labels = read_raw<std::uint8_t>(dir / entry.at("mask_file").get<std::string>(),
                                      plane * shape[0]);
      subject.masks.emplace();
    }
    for (int z = 0; z < shape[0]; ++z) {
      ImageTensor slice;
      slice.kind = kind;
      slice.slice_id = slice_ids.at(z);
      slice.pixels = Grid2D<float>(shape[1], shape[2]);
      std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(z * plane), plane,
                  slice.pixels.values.begin());
      subject.slices.push_back(std::move(slice));
      if (subject.masks) {
        SegMask mask{Grid2D<std::uint8_t>(shape[1], shape[2])};
        std::copy_n(labels.begin() + static_cast<std::ptrdiff_t>(z * plane), plane,
                    mask.labels.values.begin());
        subject.masks->push_back(std::move(mask));
      }
    }
    subjects.push_back(std::move(subject));
  }
  return subjects;
}

std::vector<Subject> group_by_subject_and_kind(std::span<const ImageTensor> images,
                                               std::span<const Subject> originals) {
  std::map<std::string, const Subject*> by_id;
  for (const auto& s : originals) by_id[s.id] = &s;
  std::map<std::pair<std::string, ImageKind>, Subject> grouped;
  for (const auto& image : images) {
    const std::string id = subject_of(image.slice_id);
    auto& entry = grouped[{id, image.kind}];
    if (entry.slices.empty()) {
      entry.id = id;
      auto it = by_id.find(id);
      if (it != by_id.end()) {
        entry.domain = it->second->domain;
        entry.modality = it->second->modality;
        entry.spacing = it->second->spacing;
      }
    }
    entry.slices.push_back(image);
  }
  std::vector<Subject> out;
  for (auto& [key, subject] : grouped) out.push_back(std::move(subject));
  return out;
}

std::vector<ImageTensor> flatten_slices(std::span<const Subject> entries) {
  std::vector<ImageTensor> out;
  for (const auto& entry : entries) {
    out.insert(out.end(), entry.slices.begin(), entry.slices.end());
  }
  return out;
}

SyntheticDomains assemble_synthetic_domains(std::span<const Subject> source_train,
                                            std::span<const Subject> target_train,
                                            std::span<const ImageTensor> translated,
                                            std::span<const std::string> labeled_ids) {
  std::map<std::pair<std::string, ImageKind>, const ImageTensor*> lookup;
  for (const auto& image : translated) lookup[{image.slice_id, image.kind}] = &image;
  auto find = [&](const std::string& slice_id, ImageKind kind) -> const ImageTensor& {
    auto it = lookup.find({slice_id, kind});
    if (it == lookup.end()) {
      throw InvalidInput("missing " + std::string(to_string(kind)) + " translation of " +
                         slice_id);
    }
    return *it->second;
  };
  const std::set<std::string> labeled(labeled_ids.begin(), labeled_ids.end());

  SyntheticDomains out;
  for (const auto& subject : source_train) {
    const bool is_labeled = labeled.contains(subject.id) && subject.masks.has_value();
    for (std::size_t i = 0; i < subject.slices.size(); ++i) {
      const ImageTensor& xs = subject.slices[i];
      const ImageTensor& s2t = find(xs.slice_id, ImageKind::kS2T);
      const ImageTensor& s2t2s = find(xs.slice_id, ImageKind::kS2T2S);
      out.target_like.push_back(s2t);
      out.source_like.push_back(s2t2s);
      out.pairs.push_back({xs, s2t, PairKind::kSourceAndS2T});
      out.pairs.push_back({s2t2s, s2t, PairKind::kCycleSourceAndS2T});
      if (is_labeled) {
        out.labeled_target_like.push_back({s2t, (*subject.masks)[i]});
        out.labeled_cycle_source.push_back({s2t2s, (*subject.masks)[i]});
      }
    }
  }
  for (const auto& subject : target_train) {
    for (const auto& xt : subject.slices) {
      const ImageTensor& t2s = find(xt.slice_id, ImageKind::kT2S);
      const ImageTensor& t2s2t = find(xt.slice_id, ImageKind::kT2S2T);
      out.source_like.push_back(t2s);
      out.target_like.push_back(t2s2t);
      out.pairs.push_back({t2s, xt, PairKind::kT2SAndTarget});
      out.pairs.push_back({t2s, t2s2t, PairKind::kT2SAndCycleTarget});
    }
  }
  return out;
}

}  // namespace leuda
