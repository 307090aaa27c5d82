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

// Per-step observation features of a target vehicle.
//
// Column layout (F = 18):
//    0 TV lateral velocity         1 TV lateral acceleration
//    2 TV longitudinal velocity    3 TV longitudinal acceleration
//    4 TV offset from lane centre  5 left lane exists
//    6 right lane exists           7 TV lane index / (lanes - 1)
//    8 preceding dlon              9 preceding dv_lon
//   10 following dlon             11 following dv_lon
//   12 nearest-left dlon          13 nearest-left dv_lon
//   14 nearest-right dlon         15 nearest-right dv_lon
//   16 preceding exists           17 following exists
//
// Absent neighbours read dlon = 200 m and dv_lon = 0. The adjacent-lane
// slots have no own flag: an empty adjacent lane reads as the sentinel and
// a missing lane is visible through columns 5 and 6.

#ifndef MANTRA_FEATURES_HPP_
#define MANTRA_FEATURES_HPP_

#include <span>
#include <vector>

#include "mantra/matrix.hpp"
#include "mantra/scene.hpp"

namespace mantra {

inline constexpr int kNumFeatures = 18;
inline constexpr double kAbsentDistance = 200.0;

enum FeatureColumn : int {
  kTvLatVel = 0,
  kTvLatAcc,
  kTvLonVel,
  kTvLonAcc,
  kTvLaneOffset,
  kLeftLaneExists,
  kRightLaneExists,
  kTvLaneIndex,
  kPrecedingDist,
  kPrecedingRelVel,
  kFollowingDist,
  kFollowingRelVel,
  kLeftDist,
  kLeftRelVel,
  kRightDist,
  kRightRelVel,
  kPrecedingExists,
  kFollowingExists,
};

// Raw (unstandardised) features for frames [t_end - t_obs + 1, t_end].
// Throws DataError when the TV history is shorter than t_obs.
Matrix extract_features(const Scene& scene, int tv_id, int t_end, int t_obs);

// Per-column standardisation fitted on a training set.
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  static FeatureStats identity(int n_features);
  static FeatureStats fit(std::span<const Matrix> observations);
  Matrix apply(const Matrix& raw) const;
  bool empty() const { return mean.empty(); }
};

}  // namespace mantra

#endif  // MANTRA_FEATURES_HPP_
