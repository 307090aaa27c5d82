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

#include "mantra/features.hpp"

#include <cmath>
#include <string>

#include "mantra/errors.hpp"

namespace mantra {
namespace {

void neighbour(const Scene& scene, const std::optional<int>& id, int frame,
               const VehicleState& tv, double* dist, double* rel_vel) {
  if (!id) {
    *dist = kAbsentDistance;
    *rel_vel = 0.0;
    return;
  }
  const VehicleState& s = scene.track(*id).at(frame);
  *dist = s.pos.lon - tv.pos.lon;
  *rel_vel = s.vel.lon - tv.vel.lon;
}

}  // namespace

Matrix extract_features(const Scene& scene, int tv_id, int t_end, int t_obs) {
  if (t_obs <= 0) throw std::invalid_argument("t_obs must be positive");
  const Track& track = scene.track(tv_id);
  const int first = t_end - t_obs + 1;
  if (!track.covers(first) || !track.covers(t_end))
    throw DataError("insufficient history for vehicle " + std::to_string(tv_id) +
                    " ending at frame " + std::to_string(t_end));
  const LaneGeometry& geom = scene.geometry;
  Matrix out(static_cast<std::size_t>(t_obs), kNumFeatures);
  for (int k = 0; k < t_obs; ++k) {
    const int frame = first + k;
    const VehicleState& tv = track.at(frame);
    auto row = out.row(static_cast<std::size_t>(k));
    row[kTvLatVel] = tv.vel.lat;
    row[kTvLatAcc] = tv.acc.lat;
    row[kTvLonVel] = tv.vel.lon;
    row[kTvLonAcc] = tv.acc.lon;
    const auto lane = geom.lane_at(tv.pos.lat);
    if (lane) {
      row[kTvLaneOffset] = tv.pos.lat - geom.lane_center(*lane);
      row[kLeftLaneExists] = *lane + 1 < geom.lane_count ? 1.0 : 0.0;
      row[kRightLaneExists] = *lane > 0 ? 1.0 : 0.0;
      row[kTvLaneIndex] =
          geom.lane_count > 1 ? static_cast<double>(*lane) / (geom.lane_count - 1) : 0.0;
    }
    const SurroundingVehicles svs = select_svs(scene, tv_id, frame);
    neighbour(scene, svs[SvRole::kPreceding], frame, tv, &row[kPrecedingDist],
              &row[kPrecedingRelVel]);
    neighbour(scene, svs[SvRole::kFollowing], frame, tv, &row[kFollowingDist],
              &row[kFollowingRelVel]);
    neighbour(scene, svs[SvRole::kLeft0], frame, tv, &row[kLeftDist], &row[kLeftRelVel]);
    neighbour(scene, svs[SvRole::kRight0], frame, tv, &row[kRightDist],
              &row[kRightRelVel]);
    row[kPrecedingExists] = svs[SvRole::kPreceding] ? 1.0 : 0.0;
    row[kFollowingExists] = svs[SvRole::kFollowing] ? 1.0 : 0.0;
  }
  return out;
}

FeatureStats FeatureStats::identity(int n_features) {
  FeatureStats s;
  s.mean.assign(static_cast<std::size_t>(n_features), 0.0);
  s.stddev.assign(static_cast<std::size_t>(n_features), 1.0);
  return s;
}

FeatureStats FeatureStats::fit(std::span<const Matrix> observations) {
  if (observations.empty()) throw DataError("cannot fit feature statistics on no data");
  const std::size_t f = observations.front().cols();
  std::vector<double> sum(f, 0.0), sq(f, 0.0);
  double count = 0.0;
  for (const Matrix& m : observations) {
    if (m.cols() != f) throw DataError("inconsistent feature count");
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < f; ++c) sum[c] += m(r, c);
    count += static_cast<double>(m.rows());
  }
  FeatureStats s;
  s.mean.resize(f);
  s.stddev.resize(f);
  for (std::size_t c = 0; c < f; ++c) s.mean[c] = sum[c] / count;
  for (const Matrix& m : observations)
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < f; ++c) {
        const double d = m(r, c) - s.mean[c];
        sq[c] += d * d;
      }
  for (std::size_t c = 0; c < f; ++c) {
    const double sd = std::sqrt(sq[c] / count);
    s.stddev[c] = sd > 1e-6 ? sd : 1.0;
  }
  return s;
}

Matrix FeatureStats::apply(const Matrix& raw) const {
  if (raw.cols() != mean.size()) throw DataError("feature count does not match statistics");
  Matrix out = raw;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c)
      out(r, c) = (out(r, c) - mean[c]) / stddev[c];
  return out;
}

}  // namespace mantra
