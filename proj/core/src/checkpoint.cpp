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

#include "leuda/checkpoint.hpp"

namespace leuda {
namespace {

template <typename Fn>
void for_each_module(ModelBundle& model, Fn fn) {
  fn("student", static_cast<torch::nn::Module&>(*model.student));
  fn("teacher_intra", static_cast<torch::nn::Module&>(*model.teacher_intra.model));
  fn("teacher_inter", static_cast<torch::nn::Module&>(*model.teacher_inter.model));
  for (std::size_t k = 0; k < model.levels.size(); ++k) {
    const std::string level = std::to_string(model.levels[k]);
    fn("d_intra_" + level, static_cast<torch::nn::Module&>(*model.d_intra[k]));
    fn("d_inter_" + level, static_cast<torch::nn::Module&>(*model.d_inter[k]));
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, ModelBundle& model,
                     StudentOptimizers* optimizers, const CheckpointState& state) {
  torch::serialize::OutputArchive archive;
  archive.write("config_hash", c10::IValue(state.config_hash));
  archive.write("epoch", c10::IValue(static_cast<std::int64_t>(state.epoch)));
  archive.write("iteration", c10::IValue(state.iteration));
  archive.write("teacher_intra_updates", c10::IValue(model.teacher_intra.updates));
  archive.write("teacher_inter_updates", c10::IValue(model.teacher_inter.updates));
  for_each_module(model, [&](const std::string& name, torch::nn::Module& m) {
    torch::serialize::OutputArchive sub;
    m.save(sub);
    archive.write(name, sub);
  });
  archive.write("has_optimizers", c10::IValue(optimizers != nullptr));
  if (optimizers) {
    torch::serialize::OutputArchive student, discriminators;
    optimizers->student->save(student);
    optimizers->discriminators->save(discriminators);
    archive.write("opt_student", student);
    archive.write("opt_discriminators", discriminators);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  archive.save_to(path.string());
}

CheckpointState load_checkpoint(const std::filesystem::path& path, ModelBundle& model,
                                StudentOptimizers* optimizers,
                                const std::string& expected_hash) {
  if (!std::filesystem::exists(path)) throw InvalidInput("no checkpoint at " + path.string());
  torch::serialize::InputArchive archive;
  archive.load_from(path.string());
  CheckpointState state;
  c10::IValue value;
  archive.read("config_hash", value);
  state.config_hash = value.toStringRef();
  if (!expected_hash.empty() && state.config_hash != expected_hash) {
    throw InvalidInput("checkpoint " + path.string() + " has config hash " + state.config_hash +
                       ", expected " + expected_hash);
  }
  archive.read("epoch", value);
  state.epoch = static_cast<int>(value.toInt());
  archive.read("iteration", value);
  state.iteration = value.toInt();
  archive.read("teacher_intra_updates", value);
  model.teacher_intra.updates = value.toInt();
  archive.read("teacher_inter_updates", value);
  model.teacher_inter.updates = value.toInt();
  for_each_module(model, [&](const std::string& name, torch::nn::Module& m) {
    torch::serialize::InputArchive sub;
    archive.read(name, sub);
    m.load(sub);
  });
  for (auto* teacher : {&model.teacher_intra, &model.teacher_inter}) {
    for (auto& p : teacher->model->parameters()) p.set_requires_grad(false);
  }
  archive.read("has_optimizers", value);
  if (optimizers && value.toBool()) {
    torch::serialize::InputArchive student, discriminators;
    archive.read("opt_student", student);
    archive.read("opt_discriminators", discriminators);
    optimizers->student->load(student);
    optimizers->discriminators->load(discriminators);
  }
  return state;
}

}  // namespace leuda
