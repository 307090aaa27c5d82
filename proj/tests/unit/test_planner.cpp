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

#include "mantra/planner.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "mantra/errors.hpp"

namespace mantra {
namespace {

TvForecast straight_tv(Point2 start, double speed, int n, double prob, int mode = 0) {
  TvForecast f;
  f.prob = prob;
  f.mode = mode;
  for (int k = 1; k <= n; ++k) f.mean.push_back({start.lon + 0.2 * k * speed, start.lat});
  return f;
}

// Finite-horizon LQ tracking for one axis of the double integrator, with
// the state augmented by a constant 1 for the affine reference.
std::vector<double> riccati_controls(double p0, double v0, double dt, int horizon,
                                     Eigen::Matrix3d w, double r) {
  Eigen::Matrix3d a;
  a << 1, dt, 0, 0, 1, 0, 0, 0, 1;
  Eigen::Vector3d b(0.5 * dt * dt, dt, 0.0);
  std::vector<Eigen::RowVector3d> gains(static_cast<std::size_t>(horizon));
  Eigen::Matrix3d p = w;
  for (int k = horizon - 1; k >= 0; --k) {
    const double s = r + b.dot(p * b);
    const Eigen::RowVector3d gain = (b.transpose() * p * a) / s;
    gains[static_cast<std::size_t>(k)] = gain;
    const Eigen::Matrix3d stage = k >= 1 ? w : Eigen::Matrix3d::Zero();
    p = stage + a.transpose() * p * a - a.transpose() * p * b * gain;
  }
  std::vector<double> u;
  Eigen::Vector3d x(p0, v0, 1.0);
  for (int k = 0; k < horizon; ++k) {
    const double uk = -gains[static_cast<std::size_t>(k)].dot(x);
    u.push_back(uk);
    x = a * x + b * uk;
  }
  return u;
}

PlannerConfig wide_box() {
  PlannerConfig c;
  c.a_lon_min = -100.0;
  c.a_lon_max = 100.0;
  c.a_lat_max = 100.0;
  return c;
}

TEST_CASE("single mode without proximity equals the LQ tracking solution") {
  PlannerConfig cfg = wide_box();
  cfg.w_prox = 0.0;
  cfg.lat_ref = 3.75;
  cfg.speed_ref = 28.0;
  const EgoState ego{{0.0, 0.4}, {24.0, 0.3}};
  const std::vector<TvForecast> tv{straight_tv({-20.0, 5.0}, 25.0, cfg.horizon, 1.0)};
  const ContingencyPlan plan = plan_contingency(ego, tv, cfg);

  Eigen::Vector3d e_lat(1.0, 0.0, -cfg.lat_ref);
  Eigen::Vector3d e_lon(0.0, 1.0, -cfg.speed_ref);
  const auto u_lat = riccati_controls(ego.pos.lat, ego.vel.lat, cfg.dt, cfg.horizon,
                                      cfg.w_track * e_lat * e_lat.transpose(), cfg.w_effort);
  const auto u_lon = riccati_controls(ego.pos.lon, ego.vel.lon, cfg.dt, cfg.horizon,
                                      cfg.w_speed * e_lon * e_lon.transpose(), cfg.w_effort);
  REQUIRE(plan.branches.size() == 1);
  for (int k = 0; k < cfg.horizon; ++k) {
    CHECK(std::abs(plan.branches[0].controls[static_cast<std::size_t>(k)].lat -
                   u_lat[static_cast<std::size_t>(k)]) < 1e-6);
    CHECK(std::abs(plan.branches[0].controls[static_cast<std::size_t>(k)].lon -
                   u_lon[static_cast<std::size_t>(k)]) < 1e-6);
  }
}

TEST_CASE("contingency plans share the first control and follow the dynamics") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    PlannerConfig cfg;
    cfg.lat_ref = 3.75 * 0.5;
    const EgoState ego{{0.0, 1.9 + 0.3 * u(rng)}, {25.0 + 2 * u(rng), 0.0}};
    std::vector<TvForecast> tv;
    for (int n = 0; n < 3; ++n) {
      TvForecast f = straight_tv({-15.0 + 5 * u(rng), 5.6}, 27.0 + 3 * u(rng), cfg.horizon,
                                 n == 0 ? 0.5 : 0.25, n);
      // Mode n drifts right into the ego lane at a different rate.
      for (std::size_t k = 0; k < f.mean.size(); ++k) f.mean[k].lat -= 0.1 * n * static_cast<double>(k);
      tv.push_back(f);
    }
    const ContingencyPlan plan = plan_contingency(ego, tv, cfg);
    REQUIRE(plan.branches.size() == 3);
    for (const BranchPlan& b : plan.branches) {
      CHECK(b.controls[0].lon == plan.branches[0].controls[0].lon);
      CHECK(b.controls[0].lat == plan.branches[0].controls[0].lat);
      for (std::size_t k = 0; k < b.controls.size(); ++k) {
        const EgoState& x = b.states[k];
        const EgoState& y = b.states[k + 1];
        CHECK(std::abs(y.pos.lon - (x.pos.lon + cfg.dt * x.vel.lon +
                                    0.5 * cfg.dt * cfg.dt * b.controls[k].lon)) < 1e-9);
        CHECK(std::abs(y.vel.lat - (x.vel.lat + cfg.dt * b.controls[k].lat)) < 1e-9);
        CHECK(b.controls[k].lon >= cfg.a_lon_min);
        CHECK(b.controls[k].lon <= cfg.a_lon_max);
      }
    }
    CHECK(plan.kkt_residual < 1e-6);
    for (std::size_t i = 1; i < plan.objective_history.size(); ++i)
      CHECK(plan.objective_history[i] <= plan.objective_history[i - 1]);
    double weighted = 0.0;
    for (const BranchPlan& b : plan.branches) weighted += b.prob * b.cost;
    CHECK(weighted == doctest::Approx(plan.objective).epsilon(1e-9));
  }
}

TEST_CASE("projected Newton agrees with the accelerated gradient oracle") {
  PlannerConfig cfg;
  cfg.a_lat_max = 0.3;  // make some bounds active
  const EgoState ego{{0.0, 1.0}, {30.0, 0.0}};
  std::vector<TvForecast> tv{straight_tv({-8.0, 2.5}, 31.0, cfg.horizon, 0.7, 0),
                             straight_tv({-30.0, 5.6}, 29.0, cfg.horizon, 0.3, 1)};
  std::vector<int> branch_of;
  std::vector<double> weight;
  const PlanningProblem p = build_planning_problem(ego, tv, cfg, &branch_of, &weight);
  const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(p.Q.rows());
  const SolveResult newton = solve_projected_newton(p, z0, 1e-10, 200);
  const SolveResult oracle = solve_projected_gradient(p, z0, 1e-9, 200000);
  CHECK(newton.kkt_residual < 1e-6);
  CHECK(oracle.kkt_residual < 1e-5);
  CHECK((newton.z - oracle.z).lpNorm<Eigen::Infinity>() < 1e-4);
  CHECK(std::abs(p.value(newton.z) - p.value(oracle.z)) < 1e-8 * std::max(1.0, p.value(newton.z)));
  bool some_bound_active = false;
  for (Eigen::Index i = 0; i < newton.z.size(); ++i)
    some_bound_active = some_bound_active || newton.z[i] == p.upper[i] || newton.z[i] == p.lower[i];
  CHECK(some_bound_active);
}

TEST_CASE("identical modes give identical plans") {
  PlannerConfig cfg;
  const EgoState ego{{0.0, 1.875}, {26.0, 0.0}};
  const TvForecast f = straight_tv({-10.0, 5.6}, 28.0, cfg.horizon, 1.0 / 3.0);
  std::vector<TvForecast> tv{f, f, f};
  tv[1].mode = 1;
  tv[2].mode = 2;
  const ContingencyPlan plan = plan_contingency(ego, tv, cfg);
  for (const BranchPlan& b : plan.branches) {
    REQUIRE(b.controls.size() == plan.branches[0].controls.size());
    for (std::size_t k = 0; k < b.controls.size(); ++k)
      CHECK(b.controls[k] == plan.branches[0].controls[k]);
  }
}

TEST_CASE("planner input validation") {
  PlannerConfig cfg;
  const EgoState ego{{0.0, 0.0}, {25.0, 0.0}};
  CHECK_THROWS_AS(plan_contingency(ego, std::vector<TvForecast>{}, cfg), DataError);
  cfg.a_lon_min = 5.0;
  CHECK_THROWS_AS(plan_contingency(ego, std::vector<TvForecast>{straight_tv({}, 1, 25, 1)}, cfg),
                  ConfigError);
  cfg = PlannerConfig{};
  TvForecast bad = straight_tv({}, 1, 25, 1);
  bad.mean[3].lat = std::nan("");
  CHECK_THROWS_AS(plan_contingency(ego, std::vector<TvForecast>{bad}, cfg), NumericalError);
}

Scene scene_with(const std::vector<std::pair<int, Point2>>& vehicles) {
  Scene s;
  s.geometry = LaneGeometry::straight(3, 3.75);
  s.duration = 1;
  for (const auto& [id, pos] : vehicles) {
    Track t;
    t.id = id;
    VehicleState st;
    st.id = id;
    st.pos = pos;
    t.states.push_back(st);
    s.tracks.push_back(t);
  }
  return s;
}

TEST_CASE("target vehicle selection") {
  // Ego in lane 0 (lat 1.875); lane 1 spans [3.75, 7.5).
  CHECK(select_target_vehicle(scene_with({{0, {50, 1.875}}, {7, {30, 5.6}}}), 0, 0) == 7);
  CHECK(select_target_vehicle(
            scene_with({{0, {50, 1.875}}, {7, {10, 5.6}}, {8, {45, 5.6}}, {9, {60, 5.6}}}), 0,
            0) == 8);
  // Nobody behind-left: nearest overall.
  CHECK(select_target_vehicle(scene_with({{0, {50, 1.875}}, {4, {70, 1.875}}, {5, {90, 9.0}}}),
                              0, 0) == 4);
  CHECK_THROWS_AS(select_target_vehicle(scene_with({{0, {50, 1.875}}}), 0, 0), DataError);
}

TEST_CASE("crowded scenes match an exhaustive behind-left scan") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> lon(0.0, 200.0), lat(0.0, 11.25);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<int, Point2>> v{{0, {100.0, 1.0 + 0.5 * (trial % 3)}}};
    for (int i = 1; i < 15; ++i) v.push_back({i, {lon(rng), lat(rng)}});
    const Scene s = scene_with(v);
    int want = -1;
    double gap = 1e18;
    for (const auto& [id, p] : v) {
      if (id == 0 || p.lat < 3.75 || p.lat >= 7.5 || p.lon > 100.0) continue;
      if (100.0 - p.lon < gap) {
        gap = 100.0 - p.lon;
        want = id;
      }
    }
    if (want < 0) continue;
    CHECK(select_target_vehicle(s, 0, 0) == want);
  }
}

}  // namespace
}  // namespace mantra
