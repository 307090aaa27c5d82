/* Copyright 2026 The Mantra Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Model checkpoints as JSON: format tag, version, model config, feature
// statistics and every parameter tensor (row-major with its shape).
// Doubles are written in shortest round-trip form, so reloading is exact.

#ifndef MANTRA_CHECKPOINT_HPP_
#define MANTRA_CHECKPOINT_HPP_

#include <filesystem>

#include "mantra/io.hpp"
#include "mantra/model.hpp"

namespace mantra::io {

inline constexpr int kCheckpointVersion = 1;

Json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const Json& j);

// `extra` is stored under "run_config" when not null.
Json checkpoint_to_json(const Model& model, const Json& extra = nullptr);
Model model_from_checkpoint(const Json& j);

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const Json& extra = nullptr);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace mantra::io

#endif  // MANTRA_CHECKPOINT_HPP_
