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

// The batch pipeline behind the command-line tool. Each stage reads its
// inputs from disk, writes its artifacts below one output directory and
// embeds the resolved run configuration in every artifact (JSON files carry
// it inline, CSV files get a ".meta.json" sidecar).
//
// Data directory layout written by gen_data:
//   manifest.json                 run config, scene list, counts
//   scenes/scene_NNNN.csv         tracks
//   scenes/scene_NNNN.meta.json   lane geometry, fps, scene id, seed
//   samples.jsonl                 balanced samples with their split

#ifndef MANTRA_PIPELINE_HPP_
#define MANTRA_PIPELINE_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "mantra/config.hpp"
#include "mantra/dataset.hpp"
#include "mantra/io.hpp"
#include "mantra/metrics.hpp"
#include "mantra/model.hpp"
#include "mantra/planner.hpp"
#include "mantra/scene.hpp"

namespace mantra::pipeline {

namespace fs = std::filesystem;

// {"run_config": ..., "seed": ...}
io::Json artifact_meta(const RunConfig& cfg);

struct DataSet {
  std::vector<Scene> scenes;  // indexed by scene id
  std::vector<DatasetSample> samples;
};

std::vector<Scene> generate_scenes(const RunConfig& cfg);
std::vector<DatasetSample> make_samples(const RunConfig& cfg, std::span<const Scene> scenes);

void gen_data(const RunConfig& cfg, const fs::path& out_dir);
DataSet load_data(const fs::path& data_dir);  // throws DataError

// Labels every track of one recording; writes labels.csv and its sidecar.
void label(const RunConfig& cfg, const fs::path& tracks_csv, const fs::path& scene_meta,
           const fs::path& out_dir);

// Writes model.json, loss.csv and loss.meta.json.
Model train(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out_dir);

// Inference over one split, parallel over samples with results kept in
// sample order.
std::vector<EvalSample> predict_split(const Model& model, const DataSet& data,
                                      const std::string& split);

// Writes report.json and report.txt for the test split.
MetricsReport eval(const RunConfig& cfg, const fs::path& model_path, const fs::path& data_dir,
                   const fs::path& out_dir);

struct PlanRequest {
  int scene_id = 0;
  int ego_id = 0;
  int frame = -1;  // -1 picks one second after the first full observation window
};

// Writes plan.json, a self-contained record for the plot stage.
io::Json plan(const RunConfig& cfg, const fs::path& model_path, const fs::path& data_dir,
              const PlanRequest& req, const fs::path& out_dir);

// Renders plan.json files into SVG figures, one per input.
void plot(const std::vector<fs::path>& plan_files, const fs::path& out_dir);

}  // namespace mantra::pipeline

#endif  // MANTRA_PIPELINE_HPP_
