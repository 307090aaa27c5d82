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

// Cartesian <-> Frenet conversion against a polyline reference line.
//
// Each segment k carries a unit tangent t_k and left normal n_k. Vertices
// carry mitre normals m_k with m_k . n_{k-1} = m_k . n_k = 1, so the lines of
// constant offset d are exact parallel polylines. Inside segment k a point is
//
//   P(s, d) = a_k + u * L_k * t_k + d * ((1 - u) m_k + u m_{k+1})
//
// with u the fractional position along the segment. d is the perpendicular
// distance to the segment line and the map is exactly invertible wherever
// |d| is below the local radius of curvature.

#ifndef MANTRA_FRENET_HPP_
#define MANTRA_FRENET_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace mantra {

struct XY {
  double x = 0.0;
  double y = 0.0;
};

struct Frenet {
  double s = 0.0;
  double d = 0.0;  // left positive
};

enum class ExtentPolicy { kClamp, kReject };

class ReferenceLine {
 public:
  // Throws std::invalid_argument with fewer than two points or a zero-length
  // segment.
  explicit ReferenceLine(std::vector<XY> points);

  double length() const { return arc_.back(); }
  std::size_t segments() const { return points_.size() - 1; }
  const std::vector<XY>& points() const { return points_; }

  // `hint` is the segment matched for the previous point of a sequence; on
  // ties the continuing segment wins. The matched segment is written back.
  Frenet to_frenet(XY p, ExtentPolicy policy,
                   std::optional<std::size_t>* hint = nullptr) const;
  XY to_cartesian(Frenet f) const;

 private:
  struct Candidate {
    std::size_t segment;
    double u;
    double d;
  };
  Candidate solve(std::size_t k, XY p) const;

  std::vector<XY> points_;
  std::vector<double> arc_;
  std::vector<XY> tangent_;
  std::vector<XY> normal_;
  std::vector<XY> mitre_;
};

std::vector<Frenet> cartesian_to_frenet(std::span<const XY> points,
                                        const ReferenceLine& centerline,
                                        ExtentPolicy policy = ExtentPolicy::kClamp);
std::vector<XY> frenet_to_cartesian(std::span<const Frenet> points,
                                    const ReferenceLine& centerline);

}  // namespace mantra

#endif  // MANTRA_FRENET_HPP_
