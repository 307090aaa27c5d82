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

// Contingency planner: one ego plan per predicted TV mode, all sharing the
// first control input.
//
// Decision vector z = [u_0 | u_1..u_{T-1} of branch 0 | ... of branch N-1],
// u = (a_lon, a_lat). Each branch follows a double integrator at step dt:
//   p_{k+1} = p_k + dt v_k + dt^2/2 u_k,   v_{k+1} = v_k + dt u_k.
// Branch cost (weighted by the mode probability, floored and renormalised):
//   w_track (lat_k - lat_ref)^2 + w_speed (v_lon,k - v_ref)^2
//   + w_effort |u_k|^2 + w_prox max(0, 1 - n_k . E^-1 (p_k - m_k))^2
// with m_k the TV mean, E = diag(safe_lon, safe_lat) and n_k the unit
// direction of E^-1 (p_k - m_k) along the ego's zero-control rollout. The
// penalty is a squared hinge of an affine function, so the program stays
// convex. Accelerations are box-constrained.

#ifndef MANTRA_PLANNER_HPP_
#define MANTRA_PLANNER_HPP_

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "mantra/geometry.hpp"
#include "mantra/io.hpp"
#include "mantra/model.hpp"
#include "mantra/scene.hpp"

namespace mantra {

struct EgoState {
  Point2 pos;
  Point2 vel;
};

struct PlannerConfig {
  double dt = 0.2;
  int horizon = 25;
  double w_track = 1.0;
  double w_speed = 0.5;
  double w_effort = 0.1;
  double w_prox = 10.0;
  double safe_lon = 10.0;
  double safe_lat = 2.0;
  double a_lon_min = -6.0;
  double a_lon_max = 3.0;
  double a_lat_max = 1.5;
  double lat_ref = 0.0;
  double speed_ref = 25.0;
  double prob_floor = 1e-4;
  double tolerance = 1e-10;  // KKT residual at which the solvers stop
  int max_iterations = 200;

  void validate() const;  // throws ConfigError
};

// f(z) = z'Qz + 2q'z + c + sum_j w_j max(0, a_j'z + b_j)^2 on a box.
struct PlanningProblem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd q;
  double c = 0.0;
  Eigen::MatrixXd hinge_a;  // one row per hinge term
  Eigen::VectorXd hinge_b;
  Eigen::VectorXd hinge_w;
  Eigen::VectorXd lower, upper;

  double value(const Eigen::VectorXd& z) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& z) const;
  // Generalised Hessian: active hinges only.
  Eigen::MatrixXd hessian(const Eigen::VectorXd& z) const;
  Eigen::VectorXd project(const Eigen::VectorXd& z) const;
  // || z - P(z - grad f(z)) ||_inf; zero exactly at the constrained optimum.
  double kkt_residual(const Eigen::VectorXd& z) const;
};

struct SolveResult {
  Eigen::VectorXd z;
  int iterations = 0;
  double kkt_residual = 0.0;
  std::vector<double> objective_history;  // one entry per accepted iterate
};

// Projected Newton with an Armijo search along the projection arc.
SolveResult solve_projected_newton(const PlanningProblem& p, const Eigen::VectorXd& z0,
                                   double tolerance, int max_iterations);
// Accelerated projected gradient (diagonally scaled, adaptive restart);
// used as an independent oracle for the Newton solver.
SolveResult solve_projected_gradient(const PlanningProblem& p, const Eigen::VectorXd& z0,
                                     double tolerance, int max_iterations);

struct BranchPlan {
  std::vector<Point2> controls;  // horizon entries (a_lon, a_lat)
  std::vector<EgoState> states;  // horizon + 1 entries, states[0] = ego
  double cost = 0.0;             // unweighted branch cost
  double prob = 0.0;
  int mode = 0;
};

struct ContingencyPlan {
  std::vector<BranchPlan> branches;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  std::vector<double> objective_history;
};

// TV means per branch, in the same frame as the ego state.
struct TvForecast {
  std::vector<Point2> mean;
  double prob = 0.0;
  int mode = 0;
};

std::vector<TvForecast> forecasts_from_modes(std::span<const ModePrediction> modes,
                                             Point2 tv_origin);

// Builds the program. Branches whose forecasts are bit-identical are merged
// into one (their weights add): by strict convexity and symmetry the
// optimum gives them identical plans. `branch_of[n]` maps each forecast to
// its program branch.
PlanningProblem build_planning_problem(const EgoState& ego, std::span<const TvForecast> tv,
                                       const PlannerConfig& cfg, std::vector<int>* branch_of,
                                       std::vector<double>* branch_weight);

ContingencyPlan plan_contingency(const EgoState& ego, std::span<const TvForecast> tv,
                                 const PlannerConfig& cfg);

// Rolls the double integrator forward from `ego`.
std::vector<EgoState> simulate(const EgoState& ego, std::span<const Point2> controls, double dt);

// Nearest vehicle behind the ego in the lane to its left (by longitudinal
// gap, ties by id); falls back to the nearest other vehicle by distance.
// Throws DataError when no other vehicle is present at `frame`.
int select_target_vehicle(const Scene& scene, int ego_id, int frame);

io::Json to_json(const ContingencyPlan& plan);

}  // namespace mantra

#endif  // MANTRA_PLANNER_HPP_
