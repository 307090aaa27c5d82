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

#ifndef MANTRA_DATASET_HPP_
#define MANTRA_DATASET_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mantra/geometry.hpp"
#include "mantra/manoeuvre.hpp"
#include "mantra/matrix.hpp"
#include "mantra/scene.hpp"

namespace mantra {

struct DatasetSample {
  Matrix features;              // t_obs x F, raw
  std::vector<Point2> future;   // t_pred, relative to the TV at t_end
  LabelSequence future_labels;  // t_pred
  int tv_id = 0;
  int scene_id = 0;
  int t_end = 0;
  Point2 origin;  // TV position at t_end in the scene frame
  double tv_length = 0.0;
  double tv_width = 0.0;
  std::string split = "train";
};

struct DatasetConfig {
  int t_obs = 15;
  HorizonConfig horizon;
  int stride = 2;
  double lateral_speed_eps = 0.05;
};

struct DatasetBuild {
  std::vector<DatasetSample> samples;
  // Windows discarded because a change period held several transitions.
  int dropped_multi_transition = 0;
};

// Per-frame labels of a whole track from its lateral position and speed.
LabelSequence label_track(const Track& track, const LaneGeometry& geometry,
                          double lateral_speed_eps);

// Sliding windows over every track of every scene. Output order is stable:
// scenes in input order, tracks by id, then t_end ascending. Scenes are
// processed in parallel.
DatasetBuild build_dataset(std::span<const Scene> scenes, const DatasetConfig& cfg);

// Most frequent label; ties go to the earlier type in LK < RLC < LLC.
ManoeuvreType dominant_manoeuvre(std::span<const ManoeuvreType> labels);

// Undersamples every class (by dominant manoeuvre) to the smallest class
// count among the classes present, optionally capped at `cap_per_class`.
// Keeps the input order of the surviving samples.
std::vector<DatasetSample> balance_dataset(std::vector<DatasetSample> samples,
                                           std::uint64_t seed, int cap_per_class = 0);

// Marks the samples of round(test_fraction * scenes) randomly chosen scenes
// as "test" and the rest as "train".
void assign_split_by_scene(std::vector<DatasetSample>& samples, double test_fraction,
                           std::uint64_t seed);

std::vector<const DatasetSample*> select_split(std::span<const DatasetSample> samples,
                                               const std::string& split);

}  // namespace mantra

#endif  // MANTRA_DATASET_HPP_
