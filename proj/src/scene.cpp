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

#include "mantra/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "mantra/errors.hpp"
#include "mantra/manoeuvre.hpp"

namespace mantra {

LaneGeometry LaneGeometry::straight(int lane_count, double lane_width) {
  LaneGeometry g;
  g.lane_count = lane_count;
  g.lane_width = lane_width;
  g.markings.resize(static_cast<std::size_t>(lane_count) + 1);
  for (int i = 0; i <= lane_count; ++i)
    g.markings[static_cast<std::size_t>(i)] = i * lane_width;
  g.road_lo = 0.0;
  g.road_hi = lane_count * lane_width;
  g.validate();
  return g;
}

void LaneGeometry::validate() const {
  if (lane_count <= 0) throw ConfigError("lane_count must be positive");
  if (!(lane_width > 0.0)) throw ConfigError("lane_width must be positive");
  if (markings.size() != static_cast<std::size_t>(lane_count) + 1)
    throw ConfigError("expected lane_count + 1 lane markings");
  for (std::size_t i = 1; i < markings.size(); ++i)
    if (!(markings[i] > markings[i - 1]))
      throw ConfigError("lane markings must be strictly increasing");
  if (road_lo > markings.front() || road_hi < markings.back())
    throw ConfigError("road bounds must bracket all lane markings");
}

double LaneGeometry::lane_center(int lane) const {
  return 0.5 * (markings[static_cast<std::size_t>(lane)] +
                markings[static_cast<std::size_t>(lane) + 1]);
}

std::optional<int> LaneGeometry::lane_at(double lat) const {
  return lane_of(lat, markings);
}

const Track* Scene::find(int vehicle_id) const {
  for (const Track& t : tracks)
    if (t.id == vehicle_id) return &t;
  return nullptr;
}

const Track& Scene::track(int vehicle_id) const {
  const Track* t = find(vehicle_id);
  if (!t) throw DataError("vehicle " + std::to_string(vehicle_id) + " not in scene");
  return *t;
}

void GeneratorConfig::validate() const {
  if (lanes <= 0) throw ConfigError("lanes must be positive");
  if (merge_ego && lanes < 2) throw ConfigError("merge scenes need two lanes");
  if (!(lane_width > 0.0)) throw ConfigError("lane_width must be positive");
  if (fps <= 0) throw ConfigError("fps must be positive");
  if (!(duration_s > 0.0)) throw ConfigError("duration_s must be positive");
  if (n_vehicles < 0) throw ConfigError("n_vehicles must be non-negative");
  if (lc_rate < 0.0 || lc_rate > 1.0) throw ConfigError("lc_rate must be in [0,1]");
  if (!(speed_min > 0.0) || speed_max < speed_min)
    throw ConfigError("invalid speed range");
  if (!(lc_duration_min > 0.0) || lc_duration_max < lc_duration_min)
    throw ConfigError("invalid lane-change duration range");
  if (min_gap < 0.0 || spawn_length < 0.0)
    throw ConfigError("spacing values must be non-negative");
}

QuinticSample quintic_lane_change(double distance, double duration, double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= duration) return {distance, 0.0, 0.0};
  const double tau = t / duration;
  const double t2 = tau * tau;
  const double t3 = t2 * tau;
  return {distance * (10 * t3 - 15 * t3 * tau + 6 * t3 * t2),
          distance / duration * (30 * t2 - 60 * t3 + 30 * t2 * t2),
          distance / (duration * duration) * (60 * tau - 180 * t2 + 120 * t3)};
}

namespace {

struct Plan {
  int id;
  int lane;
  double x0;
  double v_desired;
  double v0;
  double length;
  double width;
  double wander_amp;
  double wander_period;
  double wander_phase;
  bool changes = false;
  int target_lane = 0;
  double lc_start = 0.0;
  double lc_duration = 0.0;
};

// Intelligent-driver acceleration towards the nearest leader in `lane`.
double idm_accel(std::size_t self, int lane, const std::vector<Plan>& plans,
                 const std::vector<double>& x, const std::vector<double>& v,
                 const std::vector<double>& lat, const LaneGeometry& geom) {
  constexpr double kMaxAccel = 1.2;
  constexpr double kComfortDecel = 2.0;
  constexpr double kHeadway = 1.4;
  constexpr double kJamGap = 2.5;
  const Plan& me = plans[self];
  double acc = kMaxAccel * (1.0 - std::pow(v[self] / me.v_desired, 4));
  double best_gap = std::numeric_limits<double>::infinity();
  std::size_t leader = self;
  for (std::size_t j = 0; j < plans.size(); ++j) {
    if (j == self || x[j] <= x[self]) continue;
    const auto l = geom.lane_at(lat[j]);
    if (!l || *l != lane) continue;
    const double gap = x[j] - x[self] - 0.5 * (me.length + plans[j].length);
    if (gap < best_gap) {
      best_gap = gap;
      leader = j;
    }
  }
  if (leader != self) {
    if (best_gap < 0.5) return -8.0;
    const double dv = v[self] - v[leader];
    const double desired =
        kJamGap + std::max(0.0, v[self] * kHeadway +
                                    v[self] * dv /
                                        (2.0 * std::sqrt(kMaxAccel * kComfortDecel)));
    acc -= kMaxAccel * (desired / best_gap) * (desired / best_gap);
  }
  return std::clamp(acc, -8.0, kMaxAccel);
}

}  // namespace

Scene generate_scene(const GeneratorConfig& cfg, std::uint64_t seed, int scene_id) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  Scene scene;
  scene.id = scene_id;
  scene.geometry = LaneGeometry::straight(cfg.lanes, cfg.lane_width);
  scene.fps = cfg.fps;
  scene.duration = static_cast<int>(std::lround(cfg.duration_s * cfg.fps));
  if (scene.duration < 2) throw ConfigError("scene shorter than two frames");
  const LaneGeometry& geom = scene.geometry;

  const int first_free_lane = cfg.merge_ego ? 1 : 0;
  const int free_lanes = cfg.lanes - first_free_lane;
  const double span = cfg.spawn_length > 0.0
                          ? cfg.spawn_length
                          : 40.0 * std::max(1.0, static_cast<double>(cfg.n_vehicles) /
                                                     free_lanes);

  std::vector<Plan> plans;
  plans.reserve(static_cast<std::size_t>(cfg.n_vehicles));
  for (int i = 0; i < cfg.n_vehicles; ++i) {
    Plan p;
    p.id = i;
    const bool truck = unit(rng) < 0.1;
    p.length = truck ? uniform(10.0, 16.0) : uniform(4.2, 5.2);
    p.width = truck ? 2.5 : uniform(1.7, 2.0);
    p.v_desired = truck ? uniform(cfg.speed_min, std::min(cfg.speed_max, cfg.speed_min + 3.0))
                        : uniform(cfg.speed_min, cfg.speed_max);
    p.wander_amp = uniform(0.0, 0.04);
    p.wander_period = uniform(10.0, 20.0);
    p.wander_phase = uniform(0.0, 2.0 * std::numbers::pi);
    const bool ego = cfg.merge_ego && i == 0;
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      p.lane = ego ? 0 : first_free_lane + static_cast<int>(unit(rng) * free_lanes);
      p.lane = std::min(p.lane, cfg.lanes - 1);
      p.x0 = ego ? 0.5 * span : uniform(0.0, span);
      placed = std::all_of(plans.begin(), plans.end(), [&](const Plan& o) {
        return o.lane != p.lane ||
               std::abs(o.x0 - p.x0) - 0.5 * (o.length + p.length) >= cfg.min_gap;
      });
    }
    if (!placed)
      throw ConfigError("cannot place " + std::to_string(cfg.n_vehicles) +
                        " vehicles without overlap; lower the density");
    if (ego) p.v_desired = cfg.speed_min;
    p.v0 = p.v_desired * uniform(0.9, 1.0);

    const bool wants_change = !ego && unit(rng) < cfg.lc_rate;
    const double lc_duration = uniform(cfg.lc_duration_min, cfg.lc_duration_max);
    const double latest = cfg.duration_s - lc_duration - 1.0;
    std::vector<int> targets;
    if (p.lane + 1 < cfg.lanes) targets.push_back(p.lane + 1);
    if (p.lane - 1 >= first_free_lane) targets.push_back(p.lane - 1);
    const double pick = unit(rng);
    const double when = unit(rng);
    if (wants_change && !targets.empty() && latest > cfg.lc_earliest_s) {
      p.changes = true;
      p.target_lane =
          targets[std::min(targets.size() - 1,
                           static_cast<std::size_t>(pick * static_cast<double>(targets.size())))];
      p.lc_duration = lc_duration;
      p.lc_start = cfg.lc_earliest_s + when * (latest - cfg.lc_earliest_s);
    }
    plans.push_back(p);
  }

  const std::size_t n = plans.size();
  const double dt = 1.0 / cfg.fps;
  std::vector<double> x(n), v(n), lat(n), a(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = plans[i].x0;
    v[i] = plans[i].v0;
  }
  scene.tracks.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    scene.tracks[i].id = plans[i].id;
    scene.tracks[i].first_frame = 0;
    scene.tracks[i].states.reserve(static_cast<std::size_t>(scene.duration));
  }

  for (int frame = 0; frame < scene.duration; ++frame) {
    const double t = frame * dt;
    std::vector<double> lat_v(n), lat_a(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Plan& p = plans[i];
      const double w = 2.0 * std::numbers::pi / p.wander_period;
      double y = geom.lane_center(p.lane) + p.wander_amp * std::sin(w * t + p.wander_phase);
      double vy = p.wander_amp * w * std::cos(w * t + p.wander_phase);
      double ay = -p.wander_amp * w * w * std::sin(w * t + p.wander_phase);
      if (p.changes) {
        const double dist = geom.lane_center(p.target_lane) - geom.lane_center(p.lane);
        const QuinticSample q = quintic_lane_change(dist, p.lc_duration, t - p.lc_start);
        y += q.offset;
        vy += q.speed;
        ay += q.accel;
      }
      lat[i] = y;
      lat_v[i] = vy;
      lat_a[i] = ay;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto lane = geom.lane_at(lat[i]);
      double acc = idm_accel(i, lane.value_or(plans[i].lane), plans, x, v, lat, geom);
      const Plan& p = plans[i];
      if (p.changes && t >= p.lc_start && t <= p.lc_start + p.lc_duration) {
        const int other = lane && *lane == p.lane ? p.target_lane : p.lane;
        acc = std::min(acc, idm_accel(i, other, plans, x, v, lat, geom));
      }
      a[i] = acc;
    }
    for (std::size_t i = 0; i < n; ++i) {
      VehicleState s;
      s.id = plans[i].id;
      s.pos = {x[i], lat[i]};
      s.vel = {v[i], lat_v[i]};
      s.acc = {a[i], lat_a[i]};
      s.length = plans[i].length;
      s.width = plans[i].width;
      scene.tracks[i].states.push_back(s);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double v_next = std::max(0.0, v[i] + a[i] * dt);
      x[i] += 0.5 * (v[i] + v_next) * dt;
      v[i] = v_next;
    }
  }
  return scene;
}

int SurroundingVehicles::count() const {
  return static_cast<int>(std::count_if(ids.begin(), ids.end(),
                                        [](const auto& id) { return id.has_value(); }));
}

SurroundingVehicles select_svs(const Scene& scene, int tv_id, int frame) {
  const Track& tv_track = scene.track(tv_id);
  if (!tv_track.covers(frame))
    throw DataError("target vehicle not present at frame " + std::to_string(frame));
  const VehicleState& tv = tv_track.at(frame);
  SurroundingVehicles out;
  const auto tv_lane = scene.geometry.lane_at(tv.pos.lat);
  if (!tv_lane) return out;

  struct Cand {
    double key;
    int id;
  };
  std::vector<Cand> ahead, behind, left, right;
  for (const Track& t : scene.tracks) {
    if (t.id == tv_id || !t.covers(frame)) continue;
    const VehicleState& s = t.at(frame);
    const auto lane = scene.geometry.lane_at(s.pos.lat);
    if (!lane) continue;
    const double dlon = s.pos.lon - tv.pos.lon;
    if (*lane == *tv_lane) {
      if (dlon > 0.0)
        ahead.push_back({dlon, t.id});
      else
        behind.push_back({-dlon, t.id});
    } else if (*lane == *tv_lane + 1) {
      left.push_back({std::abs(dlon), t.id});
    } else if (*lane == *tv_lane - 1) {
      right.push_back({std::abs(dlon), t.id});
    }
  }
  auto by_key = [](const Cand& a, const Cand& b) {
    return a.key < b.key || (a.key == b.key && a.id < b.id);
  };
  for (auto* v : {&ahead, &behind, &left, &right}) std::sort(v->begin(), v->end(), by_key);
  if (!ahead.empty()) out.ids[static_cast<int>(SvRole::kPreceding)] = ahead.front().id;
  if (!behind.empty()) out.ids[static_cast<int>(SvRole::kFollowing)] = behind.front().id;
  for (std::size_t k = 0; k < 3; ++k) {
    if (k < left.size()) out.ids[static_cast<int>(SvRole::kLeft0) + k] = left[k].id;
    if (k < right.size()) out.ids[static_cast<int>(SvRole::kRight0) + k] = right[k].id;
  }
  return out;
}

}  // namespace mantra
