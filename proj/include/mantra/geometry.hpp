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

#ifndef MANTRA_GEOMETRY_HPP_
#define MANTRA_GEOMETRY_HPP_

#include <cmath>

namespace mantra {

// A point in the road frame: longitudinal and lateral (left positive).
struct Point2 {
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
  friend Point2 operator+(Point2 a, Point2 b) {
    return {a.lon + b.lon, a.lat + b.lat};
  }
  friend Point2 operator-(Point2 a, Point2 b) {
    return {a.lon - b.lon, a.lat - b.lat};
  }
};

// Axis-aligned box in the road frame, centred at `center`.
struct Box {
  Point2 center;
  double length = 0.0;  // along lon
  double width = 0.0;   // along lat
};

// Open-interior overlap; touching edges do not count.
inline bool boxes_overlap(const Box& a, const Box& b) {
  return std::abs(a.center.lon - b.center.lon) < 0.5 * (a.length + b.length) &&
         std::abs(a.center.lat - b.center.lat) < 0.5 * (a.width + b.width);
}

}  // namespace mantra

#endif  // MANTRA_GEOMETRY_HPP_
