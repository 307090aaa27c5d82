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

#include <algorithm>
#include <cmath>
#include <limits>

#include "mantra/errors.hpp"

namespace mantra {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kArmijo = 1e-4;

// Unit separation direction, in ellipse-scaled coordinates, from the TV
// mean to the ego's zero-control rollout at step k.
Point2 separation_direction(const EgoState& ego, Point2 tv_mean, int k, const PlannerConfig& cfg) {
  const double t = k * cfg.dt;
  const double rx = (ego.pos.lon + t * ego.vel.lon - tv_mean.lon) / cfg.safe_lon;
  const double ry = (ego.pos.lat + t * ego.vel.lat - tv_mean.lat) / cfg.safe_lat;
  const double n = std::hypot(rx, ry);
  if (n == 0.0) return {1.0, 0.0};
  return {rx / n, ry / n};
}

double hinge_value(Point2 pos, Point2 tv_mean, Point2 dir, const PlannerConfig& cfg) {
  return 1.0 - dir.lon * (pos.lon - tv_mean.lon) / cfg.safe_lon -
         dir.lat * (pos.lat - tv_mean.lat) / cfg.safe_lat;
}

double branch_cost(const EgoState& ego, std::span<const Point2> u,
                   std::span<const EgoState> states, const TvForecast& tv,
                   const PlannerConfig& cfg) {
  double cost = 0.0;
  for (int k = 1; k <= cfg.horizon; ++k) {
    const EgoState& s = states[static_cast<std::size_t>(k)];
    const double dl = s.pos.lat - cfg.lat_ref;
    const double dv = s.vel.lon - cfg.speed_ref;
    const Point2 m = tv.mean[static_cast<std::size_t>(k - 1)];
    const double h = hinge_value(s.pos, m, separation_direction(ego, m, k, cfg), cfg);
    cost += cfg.w_track * dl * dl + cfg.w_speed * dv * dv;
    if (h > 0.0) cost += cfg.w_prox * h * h;
  }
  for (const Point2& a : u) cost += cfg.w_effort * (a.lon * a.lon + a.lat * a.lat);
  return cost;
}

}  // namespace

void PlannerConfig::validate() const {
  if (!(dt > 0.0) || horizon < 1) throw ConfigError("planner needs dt > 0 and horizon >= 1");
  if (!(a_lon_min <= a_lon_max) || !(a_lat_max >= 0.0))
    throw ConfigError("planner acceleration box is empty");
  if (!(safe_lon > 0.0 && safe_lat > 0.0)) throw ConfigError("planner safety ellipse must be positive");
  if (!(w_track >= 0 && w_speed >= 0 && w_effort > 0 && w_prox >= 0))
    throw ConfigError("planner weights must be non-negative, effort positive");
  if (!(prob_floor > 0.0)) throw ConfigError("planner probability floor must be positive");
}

// --- PlanningProblem --------------------------------------------------------

double PlanningProblem::value(const VectorXd& z) const {
  double f = z.dot(Q * z) + 2.0 * q.dot(z) + c;
  if (hinge_a.rows() > 0) {
    const VectorXd h = hinge_a * z + hinge_b;
    for (Eigen::Index j = 0; j < h.size(); ++j)
      if (h[j] > 0.0) f += hinge_w[j] * h[j] * h[j];
  }
  return f;
}

VectorXd PlanningProblem::gradient(const VectorXd& z) const {
  VectorXd g = 2.0 * (Q * z + q);
  if (hinge_a.rows() > 0) {
    const VectorXd h = hinge_a * z + hinge_b;
    for (Eigen::Index j = 0; j < h.size(); ++j)
      if (h[j] > 0.0) g += (2.0 * hinge_w[j] * h[j]) * hinge_a.row(j).transpose();
  }
  return g;
}

MatrixXd PlanningProblem::hessian(const VectorXd& z) const {
  MatrixXd hess = 2.0 * Q;
  if (hinge_a.rows() > 0) {
    const VectorXd h = hinge_a * z + hinge_b;
    for (Eigen::Index j = 0; j < h.size(); ++j)
      if (h[j] > 0.0)
        hess += (2.0 * hinge_w[j]) * hinge_a.row(j).transpose() * hinge_a.row(j);
  }
  return hess;
}

VectorXd PlanningProblem::project(const VectorXd& z) const {
  return z.cwiseMax(lower).cwiseMin(upper);
}

double PlanningProblem::kkt_residual(const VectorXd& z) const {
  return (z - project(z - gradient(z))).lpNorm<Eigen::Infinity>();
}

// --- solvers ----------------------------------------------------------------

SolveResult solve_projected_newton(const PlanningProblem& p, const VectorXd& z0,
                                   double tolerance, int max_iterations) {
  SolveResult r;
  r.z = p.project(z0);
  double f = p.value(r.z);
  r.objective_history.push_back(f);
  const Eigen::Index n = r.z.size();
  for (; r.iterations < max_iterations; ++r.iterations) {
    const VectorXd g = p.gradient(r.z);
    const double res = (r.z - p.project(r.z - g)).lpNorm<Eigen::Infinity>();
    if (res < tolerance) break;
    // Variables held at a bound by the gradient are kept out of the Newton
    // system and moved by a scaled gradient step.
    const double eps = std::min(1e-6, res);
    std::vector<Eigen::Index> free;
    std::vector<bool> binding(static_cast<std::size_t>(n), false);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lo = r.z[i] <= p.lower[i] + eps && g[i] > 0.0;
      const bool at_hi = r.z[i] >= p.upper[i] - eps && g[i] < 0.0;
      if (at_lo || at_hi) {
        binding[static_cast<std::size_t>(i)] = true;
      } else {
        free.push_back(i);
      }
    }
    const MatrixXd hess = p.hessian(r.z);
    VectorXd d = VectorXd::Zero(n);
    if (!free.empty()) {
      const Eigen::Index m = static_cast<Eigen::Index>(free.size());
      MatrixXd hf(m, m);
      VectorXd gf(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        gf[a] = g[free[static_cast<std::size_t>(a)]];
        for (Eigen::Index b = 0; b < m; ++b)
          hf(a, b) = hess(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
      }
      const Eigen::LLT<MatrixXd> llt(hf);
      if (llt.info() != Eigen::Success) throw NumericalError("planner Hessian is not positive definite");
      const VectorXd df = llt.solve(-gf);
      for (Eigen::Index a = 0; a < m; ++a) d[free[static_cast<std::size_t>(a)]] = df[a];
    }
    for (Eigen::Index i = 0; i < n; ++i)
      if (binding[static_cast<std::size_t>(i)]) d[i] = -g[i] / hess(i, i);

    auto search = [&](const VectorXd& dir, double alpha, VectorXd* z_out, double* f_out) {
      for (int tries = 0; tries < 60; ++tries, alpha *= 0.5) {
        const VectorXd zn = p.project(r.z + alpha * dir);
        const double decrease = g.dot(zn - r.z);
        if (!(decrease < 0.0)) continue;
        const double fn = p.value(zn);
        if (fn <= f + kArmijo * decrease) {
          *z_out = zn;
          *f_out = fn;
          return true;
        }
      }
      return false;
    };
    VectorXd zn;
    double fn = 0.0;
    bool ok = search(d, 1.0, &zn, &fn);
    if (!ok) ok = search(-g, 1.0 / std::max(1.0, hess.diagonal().maxCoeff()), &zn, &fn);
    if (!ok || !(fn <= f)) break;  // no representable descent left
    r.z = zn;
    f = fn;
    r.objective_history.push_back(f);
  }
  r.kkt_residual = p.kkt_residual(r.z);
  return r;
}

SolveResult solve_projected_gradient(const PlanningProblem& p, const VectorXd& z0,
                                     double tolerance, int max_iterations) {
  // Diagonal (Jacobi) metric D; a box projection is still a clamp in it.
  // The step is 1 / L with L the largest eigenvalue of D^-1/2 H D^-1/2 for
  // the Hessian H with every hinge active.
  MatrixXd full = 2.0 * p.Q;
  for (Eigen::Index j = 0; j < p.hinge_a.rows(); ++j)
    full += (2.0 * p.hinge_w[j]) * p.hinge_a.row(j).transpose() * p.hinge_a.row(j);
  const VectorXd inv_d = full.diagonal().cwiseInverse();
  const VectorXd s = inv_d.cwiseSqrt();
  const MatrixXd scaled = s.asDiagonal() * full * s.asDiagonal();
  const double lip = Eigen::SelfAdjointEigenSolver<MatrixXd>(scaled, Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .maxCoeff();
  const VectorXd step = inv_d / lip;
  SolveResult r;
  r.z = p.project(z0);
  VectorXd y = r.z;
  double t = 1.0;
  double f = p.value(r.z);
  r.objective_history.push_back(f);
  bool restarted = false;
  for (; r.iterations < max_iterations; ++r.iterations) {
    if (r.iterations % 50 == 0 && p.kkt_residual(r.z) < tolerance) break;
    const VectorXd zn = p.project(y - step.cwiseProduct(p.gradient(y)));
    const double fn = p.value(zn);
    if (fn > f) {
      // A plain step from z cannot increase f, so a second failure in a row
      // means the objective no longer resolves the remaining decrease.
      if (restarted) break;
      restarted = true;
      y = r.z;
      t = 1.0;
      continue;
    }
    restarted = false;
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = zn + ((t - 1.0) / tn) * (zn - r.z);
    t = tn;
    r.z = zn;
    f = fn;
    r.objective_history.push_back(f);
  }
  r.kkt_residual = p.kkt_residual(r.z);
  return r;
}

// --- problem assembly -------------------------------------------------------

std::vector<TvForecast> forecasts_from_modes(std::span<const ModePrediction> modes,
                                             Point2 tv_origin) {
  std::vector<TvForecast> out;
  for (const ModePrediction& m : modes) {
    TvForecast f;
    f.prob = m.prob;
    f.mode = m.mode;
    for (const GaussianParams& g : m.traj) f.mean.push_back(g.mean() + tv_origin);
    out.push_back(std::move(f));
  }
  return out;
}

PlanningProblem build_planning_problem(const EgoState& ego, std::span<const TvForecast> tv,
                                       const PlannerConfig& cfg, std::vector<int>* branch_of,
                                       std::vector<double>* branch_weight) {
  cfg.validate();
  if (tv.empty()) throw DataError("planner needs at least one predicted mode");
  const int horizon = cfg.horizon;
  for (const TvForecast& f : tv) {
    if (static_cast<int>(f.mean.size()) < horizon)
      throw DataError("TV forecast is shorter than the planning horizon");
    if (!std::isfinite(f.prob)) throw NumericalError("non-finite mode probability");
    for (const Point2& p : f.mean)
      if (!std::isfinite(p.lon) || !std::isfinite(p.lat))
        throw NumericalError("non-finite TV forecast");
  }
  if (!std::isfinite(ego.pos.lon + ego.pos.lat + ego.vel.lon + ego.vel.lat))
    throw NumericalError("non-finite ego state");

  // Merge bit-identical forecasts.
  std::vector<int> rep;  // forecast index representing each branch
  branch_of->assign(tv.size(), -1);
  std::vector<double> weight;
  for (std::size_t i = 0; i < tv.size(); ++i) {
    const double w = std::max(tv[i].prob, cfg.prob_floor);
    for (std::size_t b = 0; b < rep.size(); ++b) {
      const TvForecast& o = tv[static_cast<std::size_t>(rep[b])];
      if (std::equal(o.mean.begin(), o.mean.begin() + horizon, tv[i].mean.begin())) {
        (*branch_of)[i] = static_cast<int>(b);
        weight[b] += w;
        break;
      }
    }
    if ((*branch_of)[i] < 0) {
      (*branch_of)[i] = static_cast<int>(rep.size());
      rep.push_back(static_cast<int>(i));
      weight.push_back(w);
    }
  }
  double total = 0.0;
  for (double w : weight) total += w;
  for (double& w : weight) w /= total;
  *branch_weight = weight;

  const int branches = static_cast<int>(rep.size());
  const Eigen::Index per_branch = 2 * (horizon - 1);
  const Eigen::Index nv = 2 + branches * per_branch;
  auto var = [&](int b, int k, int axis) -> Eigen::Index {
    return k == 0 ? axis : 2 + b * per_branch + 2 * (k - 1) + axis;
  };

  PlanningProblem p;
  p.Q = MatrixXd::Zero(nv, nv);
  p.q = VectorXd::Zero(nv);
  p.hinge_a = MatrixXd::Zero(static_cast<Eigen::Index>(branches) * horizon, nv);
  p.hinge_b = VectorXd::Zero(p.hinge_a.rows());
  p.hinge_w = VectorXd::Zero(p.hinge_a.rows());
  p.lower = VectorXd(nv);
  p.upper = VectorXd(nv);
  for (Eigen::Index i = 0; i < nv; ++i) {
    const bool lon = i % 2 == 0;
    p.lower[i] = lon ? cfg.a_lon_min : -cfg.a_lat_max;
    p.upper[i] = lon ? cfg.a_lon_max : cfg.a_lat_max;
  }

  const double dt = cfg.dt;
  VectorXd a_pos_lon(nv), a_pos_lat(nv), a_vel_lon(nv);
  auto add_square = [&](const VectorXd& a, double beta, double w) {
    p.Q.noalias() += w * a * a.transpose();
    p.q += (w * beta) * a;
    p.c += w * beta * beta;
  };
  for (int b = 0; b < branches; ++b) {
    const TvForecast& f = tv[static_cast<std::size_t>(rep[static_cast<std::size_t>(b)])];
    const double w = weight[static_cast<std::size_t>(b)];
    for (int k = 1; k <= horizon; ++k) {
      a_pos_lon.setZero();
      a_pos_lat.setZero();
      a_vel_lon.setZero();
      for (int j = 0; j < k; ++j) {
        const double cp = dt * dt * (k - j - 0.5);
        a_pos_lon[var(b, j, 0)] = cp;
        a_pos_lat[var(b, j, 1)] = cp;
        a_vel_lon[var(b, j, 0)] = dt;
      }
      const double lon0 = ego.pos.lon + k * dt * ego.vel.lon;
      const double lat0 = ego.pos.lat + k * dt * ego.vel.lat;
      add_square(a_pos_lat, lat0 - cfg.lat_ref, w * cfg.w_track);
      add_square(a_vel_lon, ego.vel.lon - cfg.speed_ref, w * cfg.w_speed);

      const Point2 m = f.mean[static_cast<std::size_t>(k - 1)];
      const Point2 dir = separation_direction(ego, m, k, cfg);
      const Eigen::Index row = static_cast<Eigen::Index>(b) * horizon + (k - 1);
      p.hinge_a.row(row) = (-dir.lon / cfg.safe_lon) * a_pos_lon.transpose() +
                           (-dir.lat / cfg.safe_lat) * a_pos_lat.transpose();
      p.hinge_b[row] = hinge_value({lon0, lat0}, m, dir, cfg);
      p.hinge_w[row] = w * cfg.w_prox;
    }
    for (int k = 0; k < horizon; ++k)
      for (int axis = 0; axis < 2; ++axis) p.Q(var(b, k, axis), var(b, k, axis)) += w * cfg.w_effort;
  }
  return p;
}

std::vector<EgoState> simulate(const EgoState& ego, std::span<const Point2> controls, double dt) {
  std::vector<EgoState> s;
  s.reserve(controls.size() + 1);
  s.push_back(ego);
  for (const Point2& u : controls) {
    const EgoState& x = s.back();
    EgoState n;
    n.pos.lon = x.pos.lon + dt * x.vel.lon + 0.5 * dt * dt * u.lon;
    n.pos.lat = x.pos.lat + dt * x.vel.lat + 0.5 * dt * dt * u.lat;
    n.vel.lon = x.vel.lon + dt * u.lon;
    n.vel.lat = x.vel.lat + dt * u.lat;
    s.push_back(n);
  }
  return s;
}

ContingencyPlan plan_contingency(const EgoState& ego, std::span<const TvForecast> tv,
                                 const PlannerConfig& cfg) {
  std::vector<int> branch_of;
  std::vector<double> weight;
  const PlanningProblem p = build_planning_problem(ego, tv, cfg, &branch_of, &weight);
  const SolveResult sol = solve_projected_newton(p, VectorXd::Zero(p.Q.rows()), cfg.tolerance,
                                                 cfg.max_iterations);
  if (!sol.z.allFinite()) throw NumericalError("planner produced non-finite controls");

  ContingencyPlan plan;
  plan.objective = sol.objective_history.back();
  plan.kkt_residual = sol.kkt_residual;
  plan.iterations = sol.iterations;
  plan.objective_history = sol.objective_history;
  const int horizon = cfg.horizon;
  const Eigen::Index per_branch = 2 * (horizon - 1);
  for (std::size_t i = 0; i < tv.size(); ++i) {
    const int b = branch_of[i];
    BranchPlan bp;
    bp.mode = tv[i].mode;
    bp.prob = tv[i].prob;
    bp.controls.push_back({sol.z[0], sol.z[1]});
    for (int k = 1; k < horizon; ++k) {
      const Eigen::Index base = 2 + b * per_branch + 2 * (k - 1);
      bp.controls.push_back({sol.z[base], sol.z[base + 1]});
    }
    bp.states = simulate(ego, bp.controls, cfg.dt);
    bp.cost = branch_cost(ego, bp.controls, bp.states, tv[i], cfg);
    plan.branches.push_back(std::move(bp));
  }
  return plan;
}

int select_target_vehicle(const Scene& scene, int ego_id, int frame) {
  const VehicleState& ego = scene.track(ego_id).at(frame);
  const std::optional<int> lane = scene.geometry.lane_at(ego.pos.lat);
  int best = -1;
  double best_gap = std::numeric_limits<double>::infinity();
  int nearest = -1;
  double nearest_d = std::numeric_limits<double>::infinity();
  for (const Track& tr : scene.tracks) {
    if (tr.id == ego_id || !tr.covers(frame)) continue;
    const VehicleState& s = tr.at(frame);
    const double d = std::hypot(s.pos.lon - ego.pos.lon, s.pos.lat - ego.pos.lat);
    if (d < nearest_d || (d == nearest_d && tr.id < nearest)) {
      nearest = tr.id;
      nearest_d = d;
    }
    const std::optional<int> l = scene.geometry.lane_at(s.pos.lat);
    if (!lane || !l || *l != *lane + 1) continue;
    const double gap = ego.pos.lon - s.pos.lon;
    if (gap < 0.0) continue;
    if (gap < best_gap || (gap == best_gap && tr.id < best)) {
      best = tr.id;
      best_gap = gap;
    }
  }
  if (nearest < 0) throw DataError("no other vehicle is present at frame " + std::to_string(frame));
  return best >= 0 ? best : nearest;
}

io::Json to_json(const ContingencyPlan& plan) {
  io::Json j;
  j["objective"] = plan.objective;
  j["kkt_residual"] = plan.kkt_residual;
  j["iterations"] = plan.iterations;
  j["objective_history"] = plan.objective_history;
  io::Json branches = io::Json::array();
  for (const BranchPlan& b : plan.branches) {
    io::Json controls = io::Json::array();
    for (const Point2& u : b.controls) controls.push_back({u.lon, u.lat});
    io::Json states = io::Json::array();
    for (const EgoState& s : b.states)
      states.push_back({s.pos.lon, s.pos.lat, s.vel.lon, s.vel.lat});
    branches.push_back({{"mode", b.mode},
                        {"prob", b.prob},
                        {"cost", b.cost},
                        {"controls", controls},
                        {"states", states}});
  }
  j["branches"] = branches;
  return j;
}

}  // namespace mantra
