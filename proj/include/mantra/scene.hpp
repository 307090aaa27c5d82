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

// Highway scenes in the road-aligned frame: lon along the road, lat to the
// left. Lane 0 is the rightmost lane.

#ifndef MANTRA_SCENE_HPP_
#define MANTRA_SCENE_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "mantra/geometry.hpp"

namespace mantra {

struct LaneGeometry {
  int lane_count = 3;
  double lane_width = 3.75;
  std::vector<double> markings;  // lane_count + 1 values, increasing
  double road_lo = 0.0;
  double road_hi = 0.0;

  static LaneGeometry straight(int lane_count, double lane_width);
  void validate() const;
  double lane_center(int lane) const;
  std::optional<int> lane_at(double lat) const;
};

struct VehicleState {
  int id = 0;
  Point2 pos;
  Point2 vel;
  Point2 acc;
  double length = 4.5;
  double width = 1.8;

  Box box() const { return {pos, length, width}; }
};

struct Track {
  int id = 0;
  int first_frame = 0;
  std::vector<VehicleState> states;

  int last_frame() const {
    return first_frame + static_cast<int>(states.size()) - 1;
  }
  bool covers(int frame) const {
    return frame >= first_frame && frame <= last_frame();
  }
  const VehicleState& at(int frame) const {
    return states[static_cast<std::size_t>(frame - first_frame)];
  }
};

struct Scene {
  int id = 0;
  LaneGeometry geometry;
  int fps = 5;
  int duration = 0;  // frames
  std::vector<Track> tracks;

  const Track* find(int vehicle_id) const;
  const Track& track(int vehicle_id) const;  // throws DataError if missing
};

struct GeneratorConfig {
  int lanes = 3;
  double lane_width = 3.75;
  int fps = 5;
  double duration_s = 60.0;
  int n_vehicles = 20;
  double lc_rate = 0.5;  // probability that a vehicle changes lane once
  double speed_min = 22.0;
  double speed_max = 32.0;
  double lc_duration_min = 2.0;
  double lc_duration_max = 6.0;
  double lc_earliest_s = 3.0;  // lane changes start no earlier than this
  double spawn_length = 0.0;   // 0 picks 40 m per vehicle per lane
  double min_gap = 12.0;       // bumper-to-bumper spacing at spawn
  // Vehicle 0 becomes an ego vehicle in the rightmost lane that never
  // changes lane; all other vehicles spawn in the lanes to its left.
  bool merge_ego = false;

  void validate() const;
};

// Deterministic for a given (config, seed). Longitudinal motion follows an
// intelligent-driver-style law; lane changes use a quintic lateral profile
// with zero lateral speed and acceleration at both ends.
Scene generate_scene(const GeneratorConfig& cfg, std::uint64_t seed,
                     int scene_id = 0);

// Quintic lane-change offset s(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5 scaled
// to `distance`, with its first two time derivatives.
struct QuinticSample {
  double offset;
  double speed;
  double accel;
};
QuinticSample quintic_lane_change(double distance, double duration, double t);

enum class SvRole : int {
  kPreceding = 0,
  kFollowing,
  kLeft0,
  kLeft1,
  kLeft2,
  kRight0,
  kRight1,
  kRight2,
};
inline constexpr int kNumSvSlots = 8;

// Slot -> vehicle id; nullopt marks an absent neighbour.
struct SurroundingVehicles {
  std::array<std::optional<int>, kNumSvSlots> ids;

  const std::optional<int>& operator[](SvRole r) const {
    return ids[static_cast<std::size_t>(r)];
  }
  int count() const;
};

// Preceding/following in the TV lane, then up to three nearest by |dlon|
// in each adjacent lane (ties by id). Vehicles outside the marked road are
// ignored. Throws DataError when the TV is not present at `frame`.
SurroundingVehicles select_svs(const Scene& scene, int tv_id, int frame);

}  // namespace mantra

#endif  // MANTRA_SCENE_HPP_
