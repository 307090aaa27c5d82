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

// Evaluation suite over multimodal predictions.
//
// All positions are in the TV-relative road frame of the sample (origin at
// the TV's position at the last observed frame). Modes are ranked by
// probability; "top K" means the K most probable, ties by generator index.

#ifndef MANTRA_METRICS_HPP_
#define MANTRA_METRICS_HPP_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mantra/dataset.hpp"
#include "mantra/geometry.hpp"
#include "mantra/io.hpp"
#include "mantra/model.hpp"
#include "mantra/scene.hpp"

namespace mantra {

inline constexpr double kOverlapLatThreshold = 2.0;  // m
inline constexpr double kOverlapLonThreshold = 5.0;  // m

struct SceneContext {
  double road_lo = -1e9;  // lateral road bounds, TV-relative
  double road_hi = 1e9;
  // sv_boxes[t]: ground-truth boxes of the other vehicles at future step t.
  std::vector<std::vector<Box>> sv_boxes;
};

// Road bounds and SV boxes over the prediction window of `sample`.
SceneContext make_scene_context(const Scene& scene, const DatasetSample& sample, int t_pred);

struct EvalSample {
  std::vector<ModePrediction> modes;
  std::vector<Point2> gt;
  LabelSequence gt_labels;
  double tv_length = 4.5;
  double tv_width = 1.8;
  SceneContext scene;
};

// Mode indices ordered by probability descending, ties by position.
std::vector<std::size_t> rank_modes(std::span<const ModePrediction> modes);

// Index (into modes) of the top-K mode with the lowest full-horizon RMSE.
std::size_t best_rmse_mode(const EvalSample& s, int k);

// Per horizon h (seconds): sqrt of the dataset-mean squared displacement
// of the selected mode at step h * fps. Throws ConfigError if K > N.
std::vector<double> min_rmse_k(std::span<const EvalSample> batch, int k,
                               std::span<const double> horizons_s, int fps);
// Root of the dataset-mean squared displacement of the selected mode over
// the whole horizon. Unlike the per-horizon columns, which read a step of
// the mode chosen on the full horizon, this is non-increasing in K.
double min_rmse_full_k(std::span<const EvalSample> batch, int k);
// Probability-weighted NLL per horizon step, averaged over samples.
std::vector<double> mean_nll(std::span<const EvalSample> batch,
                             std::span<const double> horizons_s, int fps);
// Mean over samples of the best per-step label accuracy among the top K.
double max_acc_k(std::span<const EvalSample> batch, int k);

bool mode_collides(const ModePrediction& mode, const EvalSample& s);
bool mode_offroad(const ModePrediction& mode, const EvalSample& s);
// Flagged fraction over all predicted modes of all samples.
double collision_rate(std::span<const EvalSample> batch);
double offroad_rate(std::span<const EvalSample> batch);

// 1 - (1 / (K (K-1))) * sum over ordered pairs of endpoint overlap among
// the top K. Throws ConfigError if K < 2 or K > N.
double div_k(std::span<const ModePrediction> modes, int k);
double mean_div_k(std::span<const EvalSample> batch, int k);

struct MetricsReport {
  int samples = 0;
  int fps = 5;
  std::vector<double> horizons_s;
  std::vector<int> ks;
  std::map<int, std::vector<double>> min_rmse;  // K -> per horizon
  std::map<int, double> min_rmse_full;          // K -> whole horizon
  std::vector<double> nll;                      // per horizon
  std::map<int, double> max_acc;
  std::map<int, double> div;  // K >= 2 only
  double collision = 0.0;
  double offroad = 0.0;
};

MetricsReport evaluate(std::span<const EvalSample> batch, std::span<const int> ks,
                       std::span<const double> horizons_s, int fps);

io::Json to_json(const MetricsReport& r);
// Aligned text table: one row per metric, one column per horizon.
std::string format_table(const MetricsReport& r);

}  // namespace mantra

#endif  // MANTRA_METRICS_HPP_
