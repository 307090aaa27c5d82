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

#include "mantra/manoeuvre.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mantra/errors.hpp"

namespace mantra {

int num_change_periods(int t_pred, int t_change) {
  if (t_pred <= 0 || t_change <= 0)
    throw std::invalid_argument("horizon lengths must be positive");
  return (t_pred + t_change - 1) / t_change;
}

int HorizonConfig::periods() const { return num_change_periods(t_pred, t_change); }

int HorizonConfig::period_length(int i) const {
  return std::min(t_change, t_pred - period_start(i));
}

void HorizonConfig::validate() const {
  if (t_pred <= 0 || t_change <= 0 || fps <= 0)
    throw std::invalid_argument("horizon config values must be positive");
  if (t_change > t_pred)
    throw std::invalid_argument("t_change must not exceed t_pred");
}

ManoeuvreVector encode_manoeuvre_vector(std::span<const ManoeuvreType> labels,
                                        const HorizonConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(labels.size()) != cfg.t_pred)
    throw std::invalid_argument("label sequence length must equal t_pred");
  const int periods = cfg.periods();
  ManoeuvreVector mv;
  mv.types.resize(static_cast<std::size_t>(periods) + 1);
  mv.times.assign(static_cast<std::size_t>(periods), kNoTransition);
  mv.types[0] = labels[0];
  for (int i = 0; i < periods; ++i) {
    const int start = cfg.period_start(i);
    // Transitions landing on the first step of the next period belong to
    // this one: u_{i+1} is read at exactly that step.
    const int last = i + 1 < periods ? cfg.period_start(i + 1) : cfg.t_pred - 1;
    int count = 0;
    int at = -1;
    for (int j = start + 1; j <= last; ++j) {
      if (labels[static_cast<std::size_t>(j)] !=
          labels[static_cast<std::size_t>(j - 1)]) {
        ++count;
        at = j;
      }
    }
    if (count > 1) throw MultipleTransitionsInPeriod(i + 1, count);
    mv.types[static_cast<std::size_t>(i) + 1] = labels[static_cast<std::size_t>(last)];
    if (count == 1)
      mv.times[static_cast<std::size_t>(i)] =
          static_cast<double>(at - start) / cfg.period_length(i);
  }
  return mv;
}

void validate_manoeuvre_vector(const ManoeuvreVector& mv, int periods) {
  if (static_cast<int>(mv.types.size()) != periods + 1 ||
      static_cast<int>(mv.times.size()) != periods)
    throw std::invalid_argument("manoeuvre vector has wrong length");
  for (int i = 0; i < periods; ++i) {
    const double v = mv.times[static_cast<std::size_t>(i)];
    const bool same = mv.types[static_cast<std::size_t>(i)] ==
                      mv.types[static_cast<std::size_t>(i) + 1];
    if (same && v != kNoTransition)
      throw std::invalid_argument("transition time set without a type change");
    if (!same && !(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("type change needs a transition time in [0,1]");
  }
}

LabelSequence decode_manoeuvre_vector(const ManoeuvreVector& mv,
                                      const HorizonConfig& cfg) {
  cfg.validate();
  const int periods = cfg.periods();
  validate_manoeuvre_vector(mv, periods);
  LabelSequence out(static_cast<std::size_t>(cfg.t_pred));
  for (int i = 0; i < periods; ++i) {
    const int start = cfg.period_start(i);
    const int len = cfg.period_length(i);
    const ManoeuvreType from = mv.types[static_cast<std::size_t>(i)];
    const ManoeuvreType to = mv.types[static_cast<std::size_t>(i) + 1];
    int switch_at = start + len;  // no switch inside the period
    if (from != to) {
      // The last period cannot switch on its own final+1 step.
      const int max_offset = i + 1 < periods ? len : std::max(1, len - 1);
      const int offset = std::clamp(
          static_cast<int>(std::lround(mv.times[static_cast<std::size_t>(i)] * len)),
          1, max_offset);
      switch_at = start + offset;
    }
    for (int j = start; j < start + len; ++j)
      out[static_cast<std::size_t>(j)] = j < switch_at ? from : to;
  }
  return out;
}

std::optional<int> lane_of(double lat, std::span<const double> markings) {
  if (markings.size() < 2 || lat < markings.front() || lat >= markings.back())
    return std::nullopt;
  const auto it = std::upper_bound(markings.begin(), markings.end(), lat);
  return static_cast<int>(it - markings.begin()) - 1;
}

LabelSequence auto_label_lateral(std::span<const double> lat,
                                 std::span<const double> lat_speed,
                                 std::span<const double> markings,
                                 double eps) {
  if (lat.empty()) throw std::invalid_argument("empty trajectory");
  if (lat.size() != lat_speed.size())
    throw std::invalid_argument("lateral position/speed length mismatch");
  for (std::size_t i = 1; i < markings.size(); ++i)
    if (!(markings[i] > markings[i - 1]))
      throw std::invalid_argument("lane markings must be strictly increasing");
  const std::size_t n = lat.size();
  LabelSequence labels(n, ManoeuvreType::kLaneKeep);
  std::optional<int> prev = lane_of(lat[0], markings);
  for (std::size_t j = 1; j < n; ++j) {
    const std::optional<int> cur = lane_of(lat[j], markings);
    if (prev && cur && *cur != *prev) {
      const ManoeuvreType type =
          *cur > *prev ? ManoeuvreType::kLeftChange : ManoeuvreType::kRightChange;
      for (std::size_t k = j; k-- > 0;) {
        if (!(std::abs(lat_speed[k]) > eps)) break;
        labels[k] = type;
      }
      for (std::size_t k = j; k < n; ++k) {
        if (!(std::abs(lat_speed[k]) > eps)) break;
        labels[k] = type;
      }
    }
    if (cur) prev = cur;
  }
  return labels;
}

LabelSequence auto_label_trajectory(std::span<const Point2> traj,
                                    std::span<const double> markings,
                                    const AutoLabelConfig& cfg) {
  if (traj.empty()) throw std::invalid_argument("empty trajectory");
  if (traj.size() < 2)
    throw std::invalid_argument("auto-labelling needs at least two points");
  if (!(cfg.fps > 0.0)) throw std::invalid_argument("fps must be positive");
  const std::size_t n = traj.size();
  std::vector<double> lat(n);
  std::vector<double> speed(n);
  for (std::size_t i = 0; i < n; ++i) lat[i] = traj[i].lat;
  speed[0] = (lat[1] - lat[0]) * cfg.fps;
  speed[n - 1] = (lat[n - 1] - lat[n - 2]) * cfg.fps;
  for (std::size_t i = 1; i + 1 < n; ++i)
    speed[i] = (lat[i + 1] - lat[i - 1]) * 0.5 * cfg.fps;
  return auto_label_lateral(lat, speed, markings, cfg.lateral_speed_eps);
}

char label_code(ManoeuvreType t) {
  switch (t) {
    case ManoeuvreType::kLaneKeep: return 'K';
    case ManoeuvreType::kRightChange: return 'R';
    case ManoeuvreType::kLeftChange: return 'L';
  }
  return '?';
}

ManoeuvreType label_from_code(char c) {
  switch (c) {
    case 'K': return ManoeuvreType::kLaneKeep;
    case 'R': return ManoeuvreType::kRightChange;
    case 'L': return ManoeuvreType::kLeftChange;
    default:
      throw DataError(std::string("unknown manoeuvre code '") + c + "'");
  }
}

std::string labels_to_string(std::span<const ManoeuvreType> labels) {
  std::string s;
  s.reserve(labels.size());
  for (ManoeuvreType t : labels) s.push_back(label_code(t));
  return s;
}

LabelSequence labels_from_string(std::string_view s) {
  LabelSequence out;
  out.reserve(s.size());
  for (char c : s) out.push_back(label_from_code(c));
  return out;
}

std::string_view manoeuvre_name(ManoeuvreType t) {
  switch (t) {
    case ManoeuvreType::kLaneKeep: return "LK";
    case ManoeuvreType::kRightChange: return "RLC";
    case ManoeuvreType::kLeftChange: return "LLC";
  }
  return "?";
}

ManoeuvreType manoeuvre_from_name(std::string_view name) {
  for (ManoeuvreType t : kAllManoeuvreTypes)
    if (manoeuvre_name(t) == name) return t;
  throw DataError("unknown manoeuvre name '" + std::string(name) + "'");
}

}  // namespace mantra
