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

#include "mantra/frenet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mantra/errors.hpp"

namespace mantra {
namespace {

constexpr double kTieTolerance = 1e-9;
constexpr double kRangeSlack = 1e-12;

double dot(XY a, XY b) { return a.x * b.x + a.y * b.y; }

}  // namespace

ReferenceLine::ReferenceLine(std::vector<XY> points) : points_(std::move(points)) {
  if (points_.size() < 2)
    throw std::invalid_argument("reference line needs at least two points");
  const std::size_t n = points_.size() - 1;
  arc_.assign(n + 1, 0.0);
  tangent_.resize(n);
  normal_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = points_[k + 1].x - points_[k].x;
    const double dy = points_[k + 1].y - points_[k].y;
    const double len = std::hypot(dx, dy);
    if (!(len > 0.0))
      throw std::invalid_argument("reference line has a zero-length segment");
    arc_[k + 1] = arc_[k] + len;
    tangent_[k] = {dx / len, dy / len};
    normal_[k] = {-dy / len, dx / len};
  }
  mitre_.resize(n + 1);
  mitre_[0] = normal_[0];
  mitre_[n] = normal_[n - 1];
  for (std::size_t k = 1; k < n; ++k) {
    const XY a = normal_[k - 1];
    const XY b = normal_[k];
    const double denom = 1.0 + dot(a, b);
    if (denom < 1e-9)
      throw std::invalid_argument("reference line folds back on itself");
    mitre_[k] = {(a.x + b.x) / denom, (a.y + b.y) / denom};
  }
}

ReferenceLine::Candidate ReferenceLine::solve(std::size_t k, XY p) const {
  const XY a = points_[k];
  const XY q{p.x - a.x, p.y - a.y};
  const double d = dot(normal_[k], q);
  const XY dm{mitre_[k + 1].x - mitre_[k].x, mitre_[k + 1].y - mitre_[k].y};
  const double seg_len = arc_[k + 1] - arc_[k];
  const double denom = seg_len + d * dot(tangent_[k], dm);
  const XY r{q.x - d * mitre_[k].x, q.y - d * mitre_[k].y};
  const double u = denom > 0.0 ? dot(tangent_[k], r) / denom
                               : std::numeric_limits<double>::quiet_NaN();
  return {k, u, d};
}

Frenet ReferenceLine::to_frenet(XY p, ExtentPolicy policy,
                                std::optional<std::size_t>* hint) const {
  const std::size_t n = segments();
  std::optional<Candidate> best;
  auto preferred = [&](std::size_t k) {
    if (!hint || !hint->has_value()) return false;
    const std::size_t h = **hint;
    return k == h || k == h + 1;
  };
  for (std::size_t k = 0; k < n; ++k) {
    const Candidate c = solve(k, p);
    if (!(c.u >= -kRangeSlack && c.u <= 1.0 + kRangeSlack)) continue;
    if (!best) {
      best = c;
      continue;
    }
    const double diff = std::abs(c.d) - std::abs(best->d);
    if (diff < -kTieTolerance ||
        (std::abs(diff) <= kTieTolerance && preferred(c.segment) &&
         !preferred(best->segment)))
      best = c;
  }

  if (!best) {
    const Candidate first = solve(0, p);
    const Candidate last = solve(n - 1, p);
    const bool before = first.u < 0.0;
    const bool after = last.u > 1.0;
    if (before || after) {
      if (policy == ExtentPolicy::kReject)
        throw DataError("point lies beyond the reference line extent");
      const Candidate& c = before ? first : last;
      if (hint) *hint = c.segment;
      return {before ? 0.0 : length(), c.d};
    }
    // Beyond the curvature radius of every segment: fall back to the
    // Euclidean nearest segment.
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      const XY a = points_[k];
      const double seg_len = arc_[k + 1] - arc_[k];
      const double u = std::clamp(
          dot(tangent_[k], XY{p.x - a.x, p.y - a.y}) / seg_len, 0.0, 1.0);
      const double fx = a.x + u * seg_len * tangent_[k].x;
      const double fy = a.y + u * seg_len * tangent_[k].y;
      const double dist = std::hypot(p.x - fx, p.y - fy);
      if (dist < best_dist) {
        best_dist = dist;
        best = Candidate{k, u, dot(normal_[k], XY{p.x - a.x, p.y - a.y})};
      }
    }
  }
  if (hint) *hint = best->segment;
  const std::size_t k = best->segment;
  const double u = std::clamp(best->u, 0.0, 1.0);
  return {arc_[k] + u * (arc_[k + 1] - arc_[k]), best->d};
}

XY ReferenceLine::to_cartesian(Frenet f) const {
  const std::size_t n = segments();
  std::size_t k;
  if (f.s <= 0.0) {
    k = 0;
  } else if (f.s >= length()) {
    k = n - 1;
  } else {
    k = static_cast<std::size_t>(
            std::upper_bound(arc_.begin(), arc_.end(), f.s) - arc_.begin()) -
        1;
    k = std::min(k, n - 1);
  }
  const double seg_len = arc_[k + 1] - arc_[k];
  const double u = (f.s - arc_[k]) / seg_len;
  const XY m{(1.0 - u) * mitre_[k].x + u * mitre_[k + 1].x,
             (1.0 - u) * mitre_[k].y + u * mitre_[k + 1].y};
  return {points_[k].x + u * seg_len * tangent_[k].x + f.d * m.x,
          points_[k].y + u * seg_len * tangent_[k].y + f.d * m.y};
}

std::vector<Frenet> cartesian_to_frenet(std::span<const XY> points,
                                        const ReferenceLine& centerline,
                                        ExtentPolicy policy) {
  std::vector<Frenet> out;
  out.reserve(points.size());
  std::optional<std::size_t> hint;
  for (const XY& p : points) out.push_back(centerline.to_frenet(p, policy, &hint));
  return out;
}

std::vector<XY> frenet_to_cartesian(std::span<const Frenet> points,
                                    const ReferenceLine& centerline) {
  std::vector<XY> out;
  out.reserve(points.size());
  for (const Frenet& f : points) out.push_back(centerline.to_cartesian(f));
  return out;
}

}  // namespace mantra
