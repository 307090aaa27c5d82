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

// Manoeuvre labels and the compact manoeuvre-vector representation.
//
// A prediction horizon of T_pred steps is split into C change periods of
// T_change steps (the last one may be shorter). A manoeuvre vector (U, V)
// stores C + 1 manoeuvre types and C normalised transition times:
//
//   u_0        type at the first step of the horizon
//   u_i, i<C   type at the first step of period i + 1
//   u_C        type at the final step of the horizon
//   v_i        offset of the first step carrying u_i, measured from the
//              first step of period i and divided by the length of period i;
//              -1 when u_{i-1} == u_i.
//
// Steps and periods are 1-based in this description; the API is 0-based.

#ifndef MANTRA_MANOEUVRE_HPP_
#define MANTRA_MANOEUVRE_HPP_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mantra/geometry.hpp"

namespace mantra {

// Ordering is fixed and used for tie-breaking: LK < RLC < LLC.
enum class ManoeuvreType : int { kLaneKeep = 0, kRightChange = 1, kLeftChange = 2 };

inline constexpr int kNumManoeuvreTypes = 3;
inline constexpr std::array<ManoeuvreType, 3> kAllManoeuvreTypes = {
    ManoeuvreType::kLaneKeep, ManoeuvreType::kRightChange,
    ManoeuvreType::kLeftChange};

using LabelSequence = std::vector<ManoeuvreType>;

inline constexpr double kNoTransition = -1.0;

struct ManoeuvreVector {
  std::vector<ManoeuvreType> types;  // U, size C + 1
  std::vector<double> times;         // V, size C

  friend bool operator==(const ManoeuvreVector&,
                         const ManoeuvreVector&) = default;
};

struct HorizonConfig {
  int t_pred = 25;
  int t_change = 13;
  int fps = 5;

  int periods() const;
  // 0-based first step of period `i` (0-based), and its length.
  int period_start(int i) const { return i * t_change; }
  int period_length(int i) const;
  void validate() const;
};

// ceil(t_pred / t_change). Throws std::invalid_argument for non-positive
// inputs.
int num_change_periods(int t_pred, int t_change);

ManoeuvreVector encode_manoeuvre_vector(std::span<const ManoeuvreType> labels,
                                        const HorizonConfig& cfg);
LabelSequence decode_manoeuvre_vector(const ManoeuvreVector& mv,
                                      const HorizonConfig& cfg);
// Throws std::invalid_argument describing the first broken invariant.
void validate_manoeuvre_vector(const ManoeuvreVector& mv, int periods);

struct AutoLabelConfig {
  double fps = 5.0;
  double lateral_speed_eps = 0.05;  // m/s
};

// Labels a trajectory from positions. Lateral speed is taken by finite
// differences (central inside, one-sided at the ends). Lateral coordinates
// grow to the left, so crossing a marking towards larger lat is a left
// change. `lane_markings` must be strictly increasing.
LabelSequence auto_label_trajectory(std::span<const Point2> traj,
                                    std::span<const double> lane_markings,
                                    const AutoLabelConfig& cfg = {});
// Same, with measured lateral speeds.
LabelSequence auto_label_lateral(std::span<const double> lat,
                                 std::span<const double> lat_speed,
                                 std::span<const double> lane_markings,
                                 double lateral_speed_eps);

// Lane index of a lateral position, or nullopt outside the marked road.
std::optional<int> lane_of(double lat, std::span<const double> lane_markings);

char label_code(ManoeuvreType t);  // 'K', 'R', 'L'
ManoeuvreType label_from_code(char c);
std::string labels_to_string(std::span<const ManoeuvreType> labels);
LabelSequence labels_from_string(std::string_view s);
std::string_view manoeuvre_name(ManoeuvreType t);  // "LK", "RLC", "LLC"
ManoeuvreType manoeuvre_from_name(std::string_view name);

}  // namespace mantra

#endif  // MANTRA_MANOEUVRE_HPP_
