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

#include "mantra/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "mantra/errors.hpp"

namespace mantra {
namespace {

void check_k(int k, std::size_t n) {
  if (k < 1 || static_cast<std::size_t>(k) > n)
    throw ConfigError("K = " + std::to_string(k) + " is outside [1, " + std::to_string(n) + "]");
}

std::size_t horizon_step(double h, int fps, std::size_t t_pred) {
  const long step = std::lround(h * fps);
  if (step < 1 || static_cast<std::size_t>(step) > t_pred)
    throw ConfigError("horizon " + io::format_double(h) + " s is outside the prediction window");
  return static_cast<std::size_t>(step) - 1;
}

double sq_dist(Point2 a, Point2 b) {
  const double dx = a.lon - b.lon;
  const double dy = a.lat - b.lat;
  return dx * dx + dy * dy;
}

}  // namespace

SceneContext make_scene_context(const Scene& scene, const DatasetSample& sample, int t_pred) {
  SceneContext ctx;
  ctx.road_lo = scene.geometry.road_lo - sample.origin.lat;
  ctx.road_hi = scene.geometry.road_hi - sample.origin.lat;
  ctx.sv_boxes.resize(static_cast<std::size_t>(t_pred));
  for (const Track& tr : scene.tracks) {
    if (tr.id == sample.tv_id) continue;
    for (int k = 1; k <= t_pred; ++k) {
      const int frame = sample.t_end + k;
      if (!tr.covers(frame)) continue;
      Box b = tr.at(frame).box();
      b.center = b.center - sample.origin;
      ctx.sv_boxes[static_cast<std::size_t>(k - 1)].push_back(b);
    }
  }
  return ctx;
}

std::vector<std::size_t> rank_modes(std::span<const ModePrediction> modes) {
  std::vector<std::size_t> idx(modes.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return modes[a].prob > modes[b].prob; });
  return idx;
}

std::size_t best_rmse_mode(const EvalSample& s, int k) {
  check_k(k, s.modes.size());
  const std::vector<std::size_t> ranked = rank_modes(s.modes);
  std::size_t best = ranked[0];
  double best_v = 0.0;
  for (int r = 0; r < k; ++r) {
    const ModePrediction& m = s.modes[ranked[static_cast<std::size_t>(r)]];
    if (m.traj.size() != s.gt.size()) throw DataError("prediction and ground truth lengths differ");
    double total = 0.0;
    for (std::size_t t = 0; t < s.gt.size(); ++t) total += sq_dist(m.traj[t].mean(), s.gt[t]);
    if (r == 0 || total < best_v) {
      best = ranked[static_cast<std::size_t>(r)];
      best_v = total;
    }
  }
  return best;
}

std::vector<double> min_rmse_k(std::span<const EvalSample> batch, int k,
                               std::span<const double> horizons, int fps) {
  std::vector<double> acc(horizons.size(), 0.0);
  if (batch.empty()) return acc;
  for (const EvalSample& s : batch) {
    const ModePrediction& m = s.modes[best_rmse_mode(s, k)];
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      const std::size_t t = horizon_step(horizons[h], fps, s.gt.size());
      acc[h] += sq_dist(m.traj[t].mean(), s.gt[t]);
    }
  }
  for (double& v : acc) v = std::sqrt(v / static_cast<double>(batch.size()));
  return acc;
}

double min_rmse_full_k(std::span<const EvalSample> batch, int k) {
  if (batch.empty()) return 0.0;
  double acc = 0.0;
  for (const EvalSample& s : batch) {
    const ModePrediction& m = s.modes[best_rmse_mode(s, k)];
    double total = 0.0;
    for (std::size_t t = 0; t < s.gt.size(); ++t) total += sq_dist(m.traj[t].mean(), s.gt[t]);
    acc += total / static_cast<double>(s.gt.size());
  }
  return std::sqrt(acc / static_cast<double>(batch.size()));
}

std::vector<double> mean_nll(std::span<const EvalSample> batch, std::span<const double> horizons,
                             int fps) {
  std::vector<double> acc(horizons.size(), 0.0);
  if (batch.empty()) return acc;
  for (const EvalSample& s : batch) {
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      const std::size_t t = horizon_step(horizons[h], fps, s.gt.size());
      for (const ModePrediction& m : s.modes) acc[h] += m.prob * bvn_nll(m.traj[t], s.gt[t]);
    }
  }
  for (double& v : acc) v /= static_cast<double>(batch.size());
  return acc;
}

double max_acc_k(std::span<const EvalSample> batch, int k) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const EvalSample& s : batch) {
    check_k(k, s.modes.size());
    const std::vector<std::size_t> ranked = rank_modes(s.modes);
    double best = 0.0;
    for (int r = 0; r < k; ++r) {
      const LabelSequence& labels = s.modes[ranked[static_cast<std::size_t>(r)]].step_labels;
      if (labels.size() != s.gt_labels.size())
        throw DataError("predicted and ground-truth label lengths differ");
      std::size_t hit = 0;
      for (std::size_t t = 0; t < labels.size(); ++t) hit += labels[t] == s.gt_labels[t];
      best = std::max(best, static_cast<double>(hit) / static_cast<double>(labels.size()));
    }
    total += best;
  }
  return total / static_cast<double>(batch.size());
}

bool mode_collides(const ModePrediction& mode, const EvalSample& s) {
  if (s.scene.sv_boxes.size() < mode.traj.size()) throw DataError("scene context is too short");
  for (std::size_t t = 0; t < mode.traj.size(); ++t) {
    const Box tv{mode.traj[t].mean(), s.tv_length, s.tv_width};
    for (const Box& sv : s.scene.sv_boxes[t])
      if (boxes_overlap(tv, sv)) return true;
  }
  return false;
}

bool mode_offroad(const ModePrediction& mode, const EvalSample& s) {
  for (const GaussianParams& g : mode.traj)
    if (g.mu_lat < s.scene.road_lo || g.mu_lat > s.scene.road_hi) return true;
  return false;
}

double collision_rate(std::span<const EvalSample> batch) {
  std::size_t flagged = 0, total = 0;
  for (const EvalSample& s : batch)
    for (const ModePrediction& m : s.modes) {
      flagged += mode_collides(m, s);
      ++total;
    }
  return total == 0 ? 0.0 : static_cast<double>(flagged) / static_cast<double>(total);
}

double offroad_rate(std::span<const EvalSample> batch) {
  std::size_t flagged = 0, total = 0;
  for (const EvalSample& s : batch)
    for (const ModePrediction& m : s.modes) {
      flagged += mode_offroad(m, s);
      ++total;
    }
  return total == 0 ? 0.0 : static_cast<double>(flagged) / static_cast<double>(total);
}

double div_k(std::span<const ModePrediction> modes, int k) {
  if (k < 2) throw ConfigError("div_K needs K >= 2");
  check_k(k, modes.size());
  const std::vector<std::size_t> ranked = rank_modes(modes);
  int overlaps = 0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      const Point2 a = modes[ranked[static_cast<std::size_t>(i)]].traj.back().mean();
      const Point2 b = modes[ranked[static_cast<std::size_t>(j)]].traj.back().mean();
      overlaps += std::abs(a.lat - b.lat) < kOverlapLatThreshold &&
                  std::abs(a.lon - b.lon) < kOverlapLonThreshold;
    }
  return 1.0 - static_cast<double>(overlaps) / static_cast<double>(k * (k - 1));
}

double mean_div_k(std::span<const EvalSample> batch, int k) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const EvalSample& s : batch) total += div_k(s.modes, k);
  return total / static_cast<double>(batch.size());
}

MetricsReport evaluate(std::span<const EvalSample> batch, std::span<const int> ks,
                       std::span<const double> horizons, int fps) {
  if (batch.empty()) throw DataError("evaluation batch is empty");
  MetricsReport r;
  r.samples = static_cast<int>(batch.size());
  r.fps = fps;
  r.horizons_s.assign(horizons.begin(), horizons.end());
  r.ks.assign(ks.begin(), ks.end());
  for (int k : ks) {
    r.min_rmse[k] = min_rmse_k(batch, k, horizons, fps);
    r.min_rmse_full[k] = min_rmse_full_k(batch, k);
    r.max_acc[k] = max_acc_k(batch, k);
    if (k >= 2) r.div[k] = mean_div_k(batch, k);
  }
  r.nll = mean_nll(batch, horizons, fps);
  r.collision = collision_rate(batch);
  r.offroad = offroad_rate(batch);
  return r;
}

io::Json to_json(const MetricsReport& r) {
  io::Json j;
  j["samples"] = r.samples;
  j["fps"] = r.fps;
  j["horizons_s"] = r.horizons_s;
  io::Json rmse = io::Json::object();
  for (const auto& [k, v] : r.min_rmse) rmse["minRMSE-" + std::to_string(k)] = v;
  j["min_rmse"] = rmse;
  io::Json full = io::Json::object();
  for (const auto& [k, v] : r.min_rmse_full) full["minRMSE-" + std::to_string(k)] = v;
  j["min_rmse_full_horizon"] = full;
  j["mean_nll"] = r.nll;
  io::Json acc = io::Json::object();
  for (const auto& [k, v] : r.max_acc) acc["maxACC-" + std::to_string(k)] = v;
  j["max_acc"] = acc;
  io::Json div = io::Json::object();
  for (const auto& [k, v] : r.div) div["div-" + std::to_string(k)] = v;
  j["div"] = div;
  j["collision_rate"] = r.collision;
  j["offroad_rate"] = r.offroad;
  return j;
}

std::string format_table(const MetricsReport& r) {
  std::ostringstream os;
  char buf[64];
  auto cell = [&](const char* fmt, double v) {
    std::snprintf(buf, sizeof(buf), fmt, v);
    os << buf;
  };
  std::snprintf(buf, sizeof(buf), "%-18s", "metric");
  os << buf;
  for (double h : r.horizons_s) {
    std::snprintf(buf, sizeof(buf), " %11s", (io::format_double(h) + "s").c_str());
    os << buf;
  }
  os << '\n';
  auto row = [&](const std::string& name, const std::vector<double>& v) {
    std::snprintf(buf, sizeof(buf), "%-18s", name.c_str());
    os << buf;
    for (double x : v) cell(" %11.3f", x);
    os << '\n';
  };
  for (const auto& [k, v] : r.min_rmse) row("minRMSE-" + std::to_string(k), v);
  row("NLL", r.nll);
  os << '\n';
  auto scalar = [&](const std::string& name, double v, bool percent) {
    std::snprintf(buf, sizeof(buf), "%-18s", name.c_str());
    os << buf;
    cell(percent ? " %11.2f%%" : " %11.3f", percent ? 100.0 * v : v);
    os << '\n';
  };
  for (const auto& [k, v] : r.min_rmse_full) scalar("minRMSE-" + std::to_string(k) + " all", v, false);
  for (const auto& [k, v] : r.max_acc) scalar("maxACC-" + std::to_string(k), v, true);
  for (const auto& [k, v] : r.div) scalar("div-" + std::to_string(k), v, false);
  scalar("CollisionRate", r.collision, true);
  scalar("OffroadRate", r.offroad, true);
  return os.str();
}

}  // namespace mantra
