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

// Run configuration shared by the command-line tools.
//
// Values resolve in layers: built-in defaults, then an INI-style file
// ("[section]" headers, "key = value" lines, '#' or ';' comments), then the
// environment (MMNTP_SEED), then explicit overrides of the form
// "section.key=value". The resolved configuration is echoed into every
// artifact.

#ifndef MANTRA_CONFIG_HPP_
#define MANTRA_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mantra/dataset.hpp"
#include "mantra/io.hpp"
#include "mantra/model.hpp"
#include "mantra/planner.hpp"
#include "mantra/scene.hpp"
#include "mantra/training.hpp"

namespace mantra {

struct RunConfig {
  std::uint64_t seed = 0;

  GeneratorConfig generator;
  int scenes = 40;
  DatasetConfig dataset;
  int balance_cap = 667;  // per class; 0 keeps the smallest class size
  double test_fraction = 0.2;

  ModelConfig model;
  TrainConfig train;

  std::vector<int> eval_ks{1, 2, 3};
  std::vector<double> eval_horizons{1, 2, 3, 4, 5};

  PlannerConfig planner;
  int plan_target_lane_offset = 1;  // ego aims one lane to its left

  // Keeps the duplicated horizon settings consistent and validates.
  void finalise();
};

// Parsed INI: "section.key" -> raw value, in file order of first appearance.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues parse_ini(std::string_view text);  // throws ConfigError

// Applies one "section.key" assignment. Unknown keys and unparsable values
// throw ConfigError naming the key.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

// Layers the file (if non-empty path), MMNTP_SEED, then overrides.
RunConfig resolve_config(const std::string& file, const std::vector<std::string>& overrides);

io::Json to_json(const RunConfig& cfg);
// Every settable key with its current value, formatted as in the INI file.
KeyValues settings_of(const RunConfig& cfg);

// Independent 64-bit seed for a named stage, derived from the root seed.
std::uint64_t stage_seed(std::uint64_t root, std::string_view stage);

}  // namespace mantra

#endif  // MANTRA_CONFIG_HPP_
