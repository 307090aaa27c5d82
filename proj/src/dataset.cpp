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

#include "mantra/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "mantra/errors.hpp"
#include "mantra/features.hpp"

namespace mantra {

LabelSequence label_track(const Track& track, const LaneGeometry& geometry,
                          double lateral_speed_eps) {
  std::vector<double> lat(track.states.size()), speed(track.states.size());
  for (std::size_t i = 0; i < track.states.size(); ++i) {
    lat[i] = track.states[i].pos.lat;
    speed[i] = track.states[i].vel.lat;
  }
  return auto_label_lateral(lat, speed, geometry.markings, lateral_speed_eps);
}

namespace {

DatasetBuild build_scene(const Scene& scene, const DatasetConfig& cfg) {
  DatasetBuild out;
  const int t_pred = cfg.horizon.t_pred;
  std::vector<const Track*> tracks;
  for (const Track& t : scene.tracks) tracks.push_back(&t);
  std::sort(tracks.begin(), tracks.end(),
            [](const Track* a, const Track* b) { return a->id < b->id; });
  for (const Track* track : tracks) {
    const LabelSequence labels = label_track(*track, scene.geometry, cfg.lateral_speed_eps);
    for (int t_end = track->first_frame + cfg.t_obs - 1; t_end + t_pred <= track->last_frame();
         t_end += cfg.stride) {
      DatasetSample s;
      const auto offset = static_cast<std::size_t>(t_end - track->first_frame);
      s.future_labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(offset) + 1,
                             labels.begin() + static_cast<std::ptrdiff_t>(offset) + 1 + t_pred);
      try {
        (void)encode_manoeuvre_vector(s.future_labels, cfg.horizon);
      } catch (const MultipleTransitionsInPeriod&) {
        ++out.dropped_multi_transition;
        continue;
      }
      const VehicleState& now = track->at(t_end);
      s.features = extract_features(scene, track->id, t_end, cfg.t_obs);
      s.future.reserve(static_cast<std::size_t>(t_pred));
      for (int k = 1; k <= t_pred; ++k) s.future.push_back(track->at(t_end + k).pos - now.pos);
      s.tv_id = track->id;
      s.scene_id = scene.id;
      s.t_end = t_end;
      s.origin = now.pos;
      s.tv_length = now.length;
      s.tv_width = now.width;
      if (!s.features.all_finite()) throw NumericalError("non-finite feature value");
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace

DatasetBuild build_dataset(std::span<const Scene> scenes, const DatasetConfig& cfg) {
  cfg.horizon.validate();
  if (cfg.t_obs <= 0 || cfg.stride <= 0) throw ConfigError("t_obs and stride must be positive");
  std::vector<DatasetBuild> parts(scenes.size());
  const auto n = static_cast<std::ptrdiff_t>(scenes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    parts[static_cast<std::size_t>(i)] = build_scene(scenes[static_cast<std::size_t>(i)], cfg);
  DatasetBuild out;
  for (DatasetBuild& p : parts) {
    out.dropped_multi_transition += p.dropped_multi_transition;
    std::move(p.samples.begin(), p.samples.end(), std::back_inserter(out.samples));
  }
  return out;
}

ManoeuvreType dominant_manoeuvre(std::span<const ManoeuvreType> labels) {
  std::array<int, kNumManoeuvreTypes> counts{};
  for (ManoeuvreType t : labels) ++counts[static_cast<std::size_t>(t)];
  const auto best = std::max_element(counts.begin(), counts.end());
  return static_cast<ManoeuvreType>(best - counts.begin());
}

std::vector<DatasetSample> balance_dataset(std::vector<DatasetSample> samples,
                                           std::uint64_t seed, int cap_per_class) {
  std::array<std::vector<std::size_t>, kNumManoeuvreTypes> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i)
    by_class[static_cast<std::size_t>(dominant_manoeuvre(samples[i].future_labels))].push_back(i);
  std::size_t keep = samples.size();
  for (const auto& c : by_class)
    if (!c.empty()) keep = std::min(keep, c.size());
  if (cap_per_class > 0) keep = std::min(keep, static_cast<std::size_t>(cap_per_class));
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  for (auto& c : by_class) {
    std::shuffle(c.begin(), c.end(), rng);
    chosen.insert(chosen.end(), c.begin(), c.begin() + static_cast<std::ptrdiff_t>(std::min(keep, c.size())));
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<DatasetSample> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(std::move(samples[i]));
  return out;
}

void assign_split_by_scene(std::vector<DatasetSample>& samples, double test_fraction,
                           std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction > 1.0)
    throw ConfigError("test fraction must be in [0,1]");
  std::set<int> ids;
  for (const auto& s : samples) ids.insert(s.scene_id);
  std::vector<int> order(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(
      std::lround(test_fraction * static_cast<double>(order.size())));
  const std::set<int> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  for (auto& s : samples) s.split = test.count(s.scene_id) ? "test" : "train";
}

std::vector<const DatasetSample*> select_split(std::span<const DatasetSample> samples,
                                               const std::string& split) {
  std::vector<const DatasetSample*> out;
  for (const auto& s : samples)
    if (s.split == split) out.push_back(&s);
  return out;
}

}  // namespace mantra
