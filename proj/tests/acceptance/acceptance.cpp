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

// Acceptance checks, one line per criterion:
//   criterion N: PASS|FAIL  <measurements>
// Run all of them, or one with --criterion N. The exit status is nonzero
// if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradcheck.hpp"
#include "metrics_oracle.hpp"
#include "mantra/config.hpp"
#include "mantra/errors.hpp"
#include "mantra/features.hpp"
#include "mantra/gaussian.hpp"
#include "mantra/io.hpp"
#include "mantra/manoeuvre.hpp"
#include "mantra/metrics.hpp"
#include "mantra/pipeline.hpp"
#include "mantra/planner.hpp"
#include "mantra/training.hpp"

#ifndef MANTRA_CLI_PATH
#define MANTRA_CLI_PATH "mantra"
#endif

namespace mantra {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Manoeuvre vector codec

// At most one change per period; a change at step j belongs to the period
// whose span (start, next start] holds j.
LabelSequence random_grid_labels(std::mt19937_64& rng, const HorizonConfig& h) {
  std::uniform_int_distribution<int> type(0, 2);
  std::bernoulli_distribution change(0.6);
  LabelSequence out(static_cast<std::size_t>(h.t_pred));
  auto current = static_cast<ManoeuvreType>(type(rng));
  auto next = current;
  int switch_at = -1, period = -1;
  for (int t = 0; t < h.t_pred; ++t) {
    const int p = t == 0 ? 0 : (t - 1) / h.t_change;
    if (p != period) {
      period = p;
      switch_at = -1;
      const int first = p * h.t_change + 1;
      const int last = std::min((p + 1) * h.t_change, h.t_pred - 1);
      if (change(rng) && first <= last) {
        switch_at = std::uniform_int_distribution<int>(first, last)(rng);
        next = static_cast<ManoeuvreType>((static_cast<int>(current) + 1 +
                                           std::uniform_int_distribution<int>(0, 1)(rng)) % 3);
      }
    }
    if (t == switch_at) current = next;
    out[static_cast<std::size_t>(t)] = current;
  }
  return out;
}

// Two changes inside the same period.
LabelSequence crowded_labels(std::mt19937_64& rng, const HorizonConfig& h) {
  const int periods = h.periods();
  int p = std::uniform_int_distribution<int>(0, periods - 1)(rng);
  int first = p * h.t_change + 1;
  int last = std::min((p + 1) * h.t_change, h.t_pred - 1);
  while (last - first < 1) {  // need two distinct steps
    p = (p + 1) % periods;
    first = p * h.t_change + 1;
    last = std::min((p + 1) * h.t_change, h.t_pred - 1);
  }
  const int a = std::uniform_int_distribution<int>(first, last - 1)(rng);
  const int b = std::uniform_int_distribution<int>(a + 1, last)(rng);
  LabelSequence out(static_cast<std::size_t>(h.t_pred), ManoeuvreType::kLaneKeep);
  for (int t = a; t < b; ++t) out[static_cast<std::size_t>(t)] = ManoeuvreType::kLeftChange;
  for (int t = b; t < h.t_pred; ++t) out[static_cast<std::size_t>(t)] = ManoeuvreType::kRightChange;
  return out;
}

Outcome criterion_codec() {
  Stopwatch clock;
  std::mt19937_64 rng(101);
  // (10, 13) is not a valid horizon: a period may not outlast the horizon.
  const std::vector<std::pair<int, int>> shapes{{10, 5}, {25, 5}, {25, 13}};
  int trips = 0, mismatches = 0, raised = 0, violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto [t_pred, t_change] = shapes[static_cast<std::size_t>(i) % shapes.size()];
    HorizonConfig h;
    h.t_pred = t_pred;
    h.t_change = t_change;
    const LabelSequence x = random_grid_labels(rng, h);
    ++trips;
    if (decode_manoeuvre_vector(encode_manoeuvre_vector(x, h), h) != x) ++mismatches;

    const LabelSequence bad = crowded_labels(rng, h);
    ++violations;
    try {
      encode_manoeuvre_vector(bad, h);
    } catch (const MultipleTransitionsInPeriod&) {
      ++raised;
    }
  }
  const double secs = clock.seconds();
  Outcome o;
  o.pass = mismatches == 0 && raised == violations && secs < 5.0;
  o.detail = std::to_string(trips) + " round trips, " + std::to_string(mismatches) +
             " mismatches; " + std::to_string(raised) + "/" + std::to_string(violations) +
             " violations raised; " + fmt("%.2f s", secs);
  return o;
}

// ---------------------------------------------------------------------------
// 2. Gradients against central differences

ModelConfig tiny_model() {
  ModelConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.d_ff = 6;
  c.mlp_hidden = 8;
  c.n_modes = 2;
  c.t_obs = 4;
  c.t_pred = 5;
  c.t_change = 3;  // two periods
  return c;
}

TrainingExample random_example(const ModelConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  TrainingExample ex;
  ex.obs = Matrix(static_cast<std::size_t>(cfg.t_obs), static_cast<std::size_t>(cfg.n_features));
  for (double& v : ex.obs.data()) v = n01(rng);
  const int kind = static_cast<int>(rng() % 3);
  const int at = 1 + static_cast<int>(rng() % static_cast<unsigned>(cfg.t_pred - 1));
  Point2 p{0.0, 0.0};
  for (int t = 0; t < cfg.t_pred; ++t) {
    ManoeuvreType m = ManoeuvreType::kLaneKeep;
    if (kind == 1 && t < at) m = ManoeuvreType::kRightChange;
    if (kind == 2 && t >= at) m = ManoeuvreType::kLeftChange;
    ex.labels.push_back(m);
    p.lon += 5.0 + 0.3 * n01(rng);
    p.lat += 0.2 * n01(rng);
    ex.future.push_back(p);
  }
  ex.manoeuvre = encode_manoeuvre_vector(ex.labels, cfg.horizon());
  return ex;
}

Outcome criterion_gradients() {
  Stopwatch clock;
  const ModelConfig cfg = tiny_model();
  double worst = 0.0;
  std::string worst_at;
  std::size_t checked = 0, skipped = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Model model(cfg, seed);
    std::mt19937_64 rng(seed * 7919);
    const TrainingExample ex = random_example(cfg, rng);
    for (ModeSelection sel : {ModeSelection::kMMP, ModeSelection::kMTP}) {
      const testing::GradCheckResult r = testing::check_gradients(model, ex, sel, 1e-4);
      checked += r.checked;
      skipped += r.skipped;
      if (r.max_rel_error > worst) {
        worst = r.max_rel_error;
        worst_at = std::string(mode_selection_name(sel)) + " seed " + std::to_string(seed) +
                   " " + r.worst;
      }
    }
  }
  const double secs = clock.seconds();
  Outcome o;
  // Entries whose perturbation crosses a kink at both step sizes are not
  // valid finite-difference samples; they must stay rare.
  o.pass = worst < 1e-3 && skipped * 100 < checked && secs < 120.0;
  o.detail = "max rel error " + fmt("%.2e", worst) + " (" + worst_at + "), " +
             std::to_string(checked) + " entries checked, " + std::to_string(skipped) +
             " skipped at kinks; " + fmt("%.1f s", secs);
  return o;
}

// ---------------------------------------------------------------------------
// 3. Winner selection against exhaustive scans

Outcome criterion_selection() {
  std::mt19937_64 rng(303);
  const std::vector<double> levels{0.1, 0.2, 0.3, 0.5, 0.7};  // coarse, so ties are common
  int mmp_bad = 0, mtp_bad = 0, mmp_ties = 0, mtp_ties = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 8)(rng);
    const int periods = std::uniform_int_distribution<int>(1, 3)(rng);
    ManoeuvrePrediction p;
    p.modes = n;
    p.periods = periods;
    p.mode_probs.assign(static_cast<std::size_t>(n), 1.0 / n);
    p.transition_times.assign(static_cast<std::size_t>(n * periods), 0.5);
    for (int i = 0; i < n * (periods + 1) * kNumManoeuvreTypes; ++i)
      p.type_probs.push_back(levels[rng() % levels.size()]);
    std::vector<ManoeuvreType> gt;
    for (int c = 0; c <= periods; ++c) gt.push_back(static_cast<ManoeuvreType>(rng() % 3));

    std::vector<double> score(static_cast<std::size_t>(n), 0.0);
    for (int m = 0; m < n; ++m)
      for (int c = 0; c <= periods; ++c)
        score[static_cast<std::size_t>(m)] -= std::log(p.type_prob(m, c, gt[static_cast<std::size_t>(c)]));
    const double best_score = *std::min_element(score.begin(), score.end());
    const auto first = std::find(score.begin(), score.end(), best_score);
    mmp_ties += std::count(score.begin(), score.end(), best_score) > 1;
    if (select_mode_mmp(p, gt) != static_cast<int>(first - score.begin())) ++mmp_bad;

    // Endpoints on a 1 m grid so that L1 ties happen.
    std::vector<Point2> ends;
    for (int m = 0; m < n; ++m)
      ends.push_back({static_cast<double>(rng() % 5), static_cast<double>(rng() % 3)});
    const Point2 truth{static_cast<double>(rng() % 5), static_cast<double>(rng() % 3)};
    std::vector<double> dist;
    for (const Point2& e : ends) dist.push_back(std::abs(e.lon - truth.lon) + std::abs(e.lat - truth.lat));
    const double best_dist = *std::min_element(dist.begin(), dist.end());
    const auto nearest = std::find(dist.begin(), dist.end(), best_dist);
    mtp_ties += std::count(dist.begin(), dist.end(), best_dist) > 1;
    if (select_mode_mtp(ends, truth) != static_cast<int>(nearest - dist.begin())) ++mtp_bad;
  }
  Outcome o;
  o.pass = mmp_bad == 0 && mtp_bad == 0 && mmp_ties > 0 && mtp_ties > 0;
  o.detail = "10000 instances; MMP disagreements " + std::to_string(mmp_bad) + " (" +
             std::to_string(mmp_ties) + " tied), MTP disagreements " + std::to_string(mtp_bad) +
             " (" + std::to_string(mtp_ties) + " tied)";
  return o;
}

// ---------------------------------------------------------------------------
// 4. Bivariate normal NLL

Outcome criterion_bvn() {
  const double unit = bvn_nll(GaussianParams{}, {0.0, 0.0});
  const double unit_err = std::abs(unit - std::log(2.0 * std::numbers::pi));

  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int draw = 0; draw < 50; ++draw) {
    GaussianParams g;
    g.mu_lon = 20.0 * (u(rng) - 0.5);
    g.mu_lat = 4.0 * (u(rng) - 0.5);
    g.sigma_lon = 0.2 + 3.0 * u(rng);
    g.sigma_lat = 0.1 + 1.5 * u(rng);
    g.rho = 0.95 * (2.0 * u(rng) - 1.0);
    // Midpoint rule over +-9 sigma on each axis.
    const int cells = 900;
    const double x0 = g.mu_lon - 9.0 * g.sigma_lon, y0 = g.mu_lat - 9.0 * g.sigma_lat;
    const double hx = 18.0 * g.sigma_lon / cells, hy = 18.0 * g.sigma_lat / cells;
    double mass = 0.0;
    for (int i = 0; i < cells; ++i)
      for (int j = 0; j < cells; ++j)
        mass += bvn_density(g, {x0 + (i + 0.5) * hx, y0 + (j + 0.5) * hy});
    worst = std::max(worst, std::abs(mass * hx * hy - 1.0));
  }
  Outcome o;
  o.pass = unit_err < 1e-9 && worst < 1e-3;
  o.detail = "unit case off by " + fmt("%.1e", unit_err) + "; worst quadrature error " +
             fmt("%.1e", worst) + " over 50 draws";
  return o;
}

// ---------------------------------------------------------------------------
// 5. Metrics

ModePrediction mode_ending_at(Point2 end, double prob, int index, int t_pred) {
  ModePrediction m;
  m.mode = index;
  m.prob = prob;
  for (int t = 0; t < t_pred; ++t) {
    GaussianParams g;
    const double f = (t + 1.0) / t_pred;
    g.mu_lon = f * end.lon;
    g.mu_lat = f * end.lat;
    m.traj.push_back(g);
    m.step_labels.push_back(ManoeuvreType::kLaneKeep);
  }
  return m;
}

// Share of ordered top-K pairs whose endpoints are not within 5 m
// longitudinally and 2 m laterally of each other.
double oracle_div(const std::vector<ModePrediction>& modes, int k) {
  const auto ranked = testing::oracle_rank(modes);
  int pairs = 0, overlap = 0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      ++pairs;
      const Point2 a = modes[ranked[static_cast<std::size_t>(i)]].traj.back().mean();
      const Point2 b = modes[ranked[static_cast<std::size_t>(j)]].traj.back().mean();
      overlap += std::abs(a.lon - b.lon) < 5.0 && std::abs(a.lat - b.lat) < 2.0;
    }
  return 1.0 - static_cast<double>(overlap) / pairs;
}

Outcome criterion_metrics() {
  std::mt19937_64 rng(505);
  const int t_pred = 25;
  int monotone_bad = 0, oracle_bad = 0, flag_bad = 0, flags = 0, div_bad = 0;
  for (int b = 0; b < 200; ++b) {
    const int n_modes = std::uniform_int_distribution<int>(2, 6)(rng);
    const int size = std::uniform_int_distribution<int>(1, 30)(rng);
    std::vector<EvalSample> batch;
    for (int i = 0; i < size; ++i) batch.push_back(testing::random_sample(rng, n_modes, t_pred));

    double prev_rmse = INFINITY, prev_acc = -INFINITY;
    for (int k = 1; k <= n_modes; ++k) {
      const double rmse = min_rmse_full_k(batch, k);
      const double acc = max_acc_k(batch, k);
      monotone_bad += rmse > prev_rmse || acc < prev_acc;
      prev_rmse = rmse;
      prev_acc = acc;
      const double want = testing::oracle_min_rmse_full(batch, k);
      oracle_bad += std::abs(rmse - want) > 1e-12 * std::max(1.0, want);
      oracle_bad += acc != testing::oracle_max_acc(batch, k);
      if (k >= 2) div_bad += std::abs(mean_div_k(batch, k) - [&] {
                               double t = 0.0;
                               for (const auto& s : batch) t += oracle_div(s.modes, k);
                               return t / static_cast<double>(batch.size());
                             }()) > 1e-12;
    }
    for (const EvalSample& s : batch)
      for (const ModePrediction& m : s.modes) {
        flags += 2;
        flag_bad += mode_collides(m, s) != testing::oracle_collides(m, s);
        flag_bad += mode_offroad(m, s) != testing::oracle_offroad(m, s);
      }
  }

  const std::vector<ModePrediction> same{mode_ending_at({50, 0}, 0.5, 0, t_pred),
                                         mode_ending_at({50, 0}, 0.5, 1, t_pred)};
  const std::vector<ModePrediction> apart{mode_ending_at({50, 0}, 0.5, 0, t_pred),
                                          mode_ending_at({60, 0}, 0.5, 1, t_pred)};
  // One overlapping pair (lateral gap 1.9 m) out of three.
  const std::vector<ModePrediction> mixed{mode_ending_at({50, 0}, 0.4, 0, t_pred),
                                          mode_ending_at({50, 1.9}, 0.3, 1, t_pred),
                                          mode_ending_at({50, 8}, 0.3, 2, t_pred)};
  const double d_same = div_k(same, 2), d_apart = div_k(apart, 2), d_mixed = div_k(mixed, 3);
  const bool cases_ok = d_same == 0.0 && d_apart == 1.0 &&
                        std::abs(d_mixed - 2.0 / 3.0) < 1e-15 &&
                        d_mixed == oracle_div(mixed, 3);

  Outcome o;
  o.pass = monotone_bad == 0 && oracle_bad == 0 && flag_bad == 0 && div_bad == 0 && cases_ok;
  o.detail = "200 batches: " + std::to_string(monotone_bad) + " monotonicity breaks, " +
             std::to_string(oracle_bad) + " oracle mismatches, " + std::to_string(flag_bad) +
             "/" + std::to_string(flags) + " flag mismatches, " + std::to_string(div_bad) +
             " div mismatches; div cases " + fmt("%g", d_same) + " " + fmt("%g", d_apart) + " " +
             fmt("%.6f", d_mixed);
  return o;
}

// ---------------------------------------------------------------------------
// 6 and 7. Synthetic end-to-end runs through the pipeline

RunConfig desk_config() {
  RunConfig cfg;  // d_model 64, three modes, 20 epochs, 40 scenes
  cfg.seed = 0;
  cfg.train.batch_size = 8;
  cfg.train.warmup_epochs = 1;
  cfg.finalise();
  return cfg;
}

RunConfig mtp_config() {
  RunConfig cfg = desk_config();
  cfg.train.selection = ModeSelection::kMTP;
  cfg.model.conditioning = DecoderConditioning::kMode;
  cfg.finalise();
  return cfg;
}

// True when `file` exists and embeds exactly this configuration.
bool made_with(const fs::path& file, const RunConfig& cfg) {
  if (!fs::exists(file)) return false;
  const io::Json j = io::Json::parse(io::read_file(file));
  return j.contains("run_config") && j["run_config"] == to_json(cfg);
}

void ensure_data(const RunConfig& cfg, const fs::path& dir) {
  if (!made_with(dir / "manifest.json", cfg)) pipeline::gen_data(cfg, dir);
}

std::vector<double> loss_column(const fs::path& csv) {
  std::istringstream in(io::read_file(csv));
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> out;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    out.push_back(std::stod(line.substr(a + 1, b - a - 1)));
  }
  return out;
}

struct TrainedRun {
  MetricsReport report;
  std::vector<double> loss;
  double train_seconds = -1.0;  // negative when reused
};

TrainedRun train_and_eval(const RunConfig& cfg, const fs::path& data, const fs::path& dir,
                          bool reuse) {
  TrainedRun run;
  if (!(reuse && made_with(dir / "model.json", cfg))) {
    Stopwatch clock;
    pipeline::train(cfg, data, dir);
    run.train_seconds = clock.seconds();
  }
  run.report = pipeline::eval(cfg, dir / "model.json", data, dir);
  run.loss = loss_column(dir / "loss.csv");
  return run;
}

Outcome criterion_end_to_end(const fs::path& work) {
  const RunConfig cfg = desk_config();
  ensure_data(cfg, work / "data");
  const pipeline::DataSet data = pipeline::load_data(work / "data");
  std::map<ManoeuvreType, int> classes;
  for (const DatasetSample& s : data.samples) ++classes[dominant_manoeuvre(s.future_labels)];

  const TrainedRun run = train_and_eval(cfg, work / "data", work / "mmp", false);
  const MetricsReport& r = run.report;
  const double l1 = run.loss.front(), l20 = run.loss.back();
  const double drop = (l1 - l20) / std::abs(l1);

  // minRMSE-3 must beat minRMSE-1 at every horizon, and by at least 5% over
  // the whole horizon.
  bool strict = true;
  for (std::size_t h = 0; h < r.horizons_s.size(); ++h)
    strict = strict && r.min_rmse.at(3)[h] < r.min_rmse.at(1)[h];
  const double full_ratio = r.min_rmse_full.at(3) / r.min_rmse_full.at(1);
  const double ratio_5s = r.min_rmse.at(3).back() / r.min_rmse.at(1).back();
  const double acc3 = r.max_acc.at(3);

  Outcome o;
  o.pass = run.train_seconds < 600.0 && drop >= 0.5 && strict && full_ratio <= 0.95 &&
           acc3 >= 0.85;
  o.detail = std::to_string(data.samples.size()) + " samples (LK/RLC/LLC " +
             std::to_string(classes[ManoeuvreType::kLaneKeep]) + "/" +
             std::to_string(classes[ManoeuvreType::kRightChange]) + "/" +
             std::to_string(classes[ManoeuvreType::kLeftChange]) + "), " +
             std::to_string(r.samples) + " test; train " + fmt("%.0f s", run.train_seconds) +
             "; L_total " + fmt("%.1f", l1) + " -> " + fmt("%.1f", l20) + " (drop " +
             fmt("%.0f%%", 100 * drop) + "); minRMSE-3/minRMSE-1 all " +
             fmt("%.3f", full_ratio) + ", 5 s " + fmt("%.3f", ratio_5s) +
             (strict ? "" : ", not strict at every horizon") + "; maxACC-3 " +
             fmt("%.3f", acc3);
  return o;
}

Outcome criterion_ablation(const fs::path& work) {
  const RunConfig mmp = desk_config();
  ensure_data(mmp, work / "data");
  const TrainedRun a = train_and_eval(mmp, work / "data", work / "mmp", true);
  const TrainedRun b = train_and_eval(mtp_config(), work / "data", work / "mtp", true);
  Outcome o;
  o.pass = a.report.offroad <= b.report.offroad;
  o.detail = "OffroadRate MMP " + fmt("%.2f%%", 100 * a.report.offroad) + " vs MTP " +
             fmt("%.2f%%", 100 * b.report.offroad) + "; CollisionRate MMP " +
             fmt("%.2f%%", 100 * a.report.collision) + " vs MTP " +
             fmt("%.2f%%", 100 * b.report.collision);
  return o;
}

// ---------------------------------------------------------------------------
// 8. Contingency planner on merge scenes

Outcome criterion_planner() {
  RunConfig cfg = desk_config();
  cfg.generator.merge_ego = true;
  cfg.finalise();
  const Model model(cfg.model, stage_seed(cfg.seed, "model"));
  const int frame = cfg.dataset.t_obs - 1 + cfg.generator.fps;
  const double dt = cfg.planner.dt;

  int scenes = 0, attempts = 0, share_bad = 0, dyn_bad = 0, kkt_bad = 0, oracle_bad = 0,
      identical_bad = 0;
  double worst_dyn = 0.0, worst_kkt = 0.0, worst_gap = 0.0;
  while (scenes < 50 && attempts < 200) {
    const Scene scene = generate_scene(cfg.generator, stage_seed(777, std::to_string(attempts)),
                                       attempts);
    ++attempts;
    int tv_id = -1;
    try {
      if (!scene.track(0).covers(frame)) continue;
      tv_id = select_target_vehicle(scene, 0, frame);
    } catch (const DataError&) {
      continue;
    }
    ++scenes;
    const VehicleState& ego_now = scene.track(0).at(frame);
    const EgoState ego{ego_now.pos, ego_now.vel};
    const std::vector<ModePrediction> modes =
        model.infer(extract_features(scene, tv_id, frame, cfg.dataset.t_obs));
    const std::vector<TvForecast> tv =
        forecasts_from_modes(modes, scene.track(tv_id).at(frame).pos);
    PlannerConfig pc = cfg.planner;
    pc.lat_ref = scene.geometry.lane_center(1);  // merge one lane left
    const ContingencyPlan plan = plan_contingency(ego, tv, pc);

    for (const BranchPlan& br : plan.branches) {
      share_bad += !(br.controls[0] == plan.branches[0].controls[0]);
      EgoState x = ego;
      for (std::size_t k = 0; k < br.controls.size(); ++k) {
        const Point2 a = br.controls[k];
        x = {{x.pos.lon + dt * x.vel.lon + 0.5 * dt * dt * a.lon,
              x.pos.lat + dt * x.vel.lat + 0.5 * dt * dt * a.lat},
             {x.vel.lon + dt * a.lon, x.vel.lat + dt * a.lat}};
        const EgoState& y = br.states[k + 1];
        worst_dyn = std::max({worst_dyn, std::abs(x.pos.lon - y.pos.lon),
                              std::abs(x.pos.lat - y.pos.lat), std::abs(x.vel.lon - y.vel.lon),
                              std::abs(x.vel.lat - y.vel.lat)});
      }
    }
    dyn_bad += worst_dyn > 1e-9;
    worst_kkt = std::max(worst_kkt, plan.kkt_residual);
    kkt_bad += !(plan.kkt_residual < 1e-6);

    // Second solver on the same program.
    std::vector<int> branch_of;
    std::vector<double> weight;
    const PlanningProblem p = build_planning_problem(ego, tv, pc, &branch_of, &weight);
    const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(p.Q.rows());
    const SolveResult newton = solve_projected_newton(p, z0, pc.tolerance, pc.max_iterations);
    const SolveResult oracle = solve_projected_gradient(p, z0, 1e-9, 400000);
    const double fn = p.value(newton.z), fo = p.value(oracle.z);
    const double gap = (fn - fo) / std::max(1.0, std::abs(fo));
    worst_gap = std::max(worst_gap, std::abs(gap));
    oracle_bad += !(p.kkt_residual(newton.z) < 1e-6) || oracle.kkt_residual > 1e-5 ||
                  std::abs(gap) > 1e-8 ||
                  std::abs(fn - plan.objective) > 1e-9 * std::max(1.0, std::abs(fn));

    // Every forecast replaced by the first one.
    std::vector<TvForecast> same(tv.size(), tv[0]);
    for (std::size_t n = 0; n < same.size(); ++n) {
      same[n].mode = static_cast<int>(n);
      same[n].prob = 1.0 / static_cast<double>(same.size());
    }
    const ContingencyPlan twin = plan_contingency(ego, same, pc);
    for (const BranchPlan& br : twin.branches)
      identical_bad += br.controls != twin.branches[0].controls ||
                       br.states.back().pos != twin.branches[0].states.back().pos;
  }
  Outcome o;
  o.pass = scenes == 50 && share_bad == 0 && dyn_bad == 0 && kkt_bad == 0 && oracle_bad == 0 &&
           identical_bad == 0;
  o.detail = std::to_string(scenes) + " scenes (" + std::to_string(attempts) +
             " drawn); shared-control breaks " + std::to_string(share_bad) +
             ", worst dynamics error " + fmt("%.1e", worst_dyn) + ", worst KKT " +
             fmt("%.1e", worst_kkt) + ", worst objective gap to oracle " + fmt("%.1e", worst_gap) +
             ", oracle disagreements " + std::to_string(oracle_bad) + ", identical-mode breaks " +
             std::to_string(identical_bad);
  return o;
}

// ---------------------------------------------------------------------------
// 9. Repeated CLI pipelines

int run(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return status;
}

// The loss CSV's last column is wall-clock time.
std::string without_timings(const fs::path& file) {
  const std::string text = io::read_file(file);
  if (file.filename() != "loss.csv") return text;
  std::istringstream in(text);
  std::string out, line;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

Outcome criterion_determinism(const fs::path& work, const std::string& cli) {
  const std::string sets =
      " --set run.seed=7 --set data.scenes=3 --set data.balance_cap=40 --set model.d_model=16"
      " --set model.n_heads=2 --set model.d_ff=16 --set model.mlp_hidden=16"
      " --set train.epochs=2 --set train.batch_size=8";
  Outcome o;
  for (const char* tag : {"a", "b"}) {
    const fs::path root = work / "cli" / tag;
    fs::remove_all(root);
    const std::string q = "'" + cli + "'";
    const std::string d = " --out '" + (root / "data").string() + "'";
    const std::vector<std::string> steps{
        q + " gen-data" + sets + d,
        q + " label" + sets + " --tracks '" + (root / "data/scenes/scene_0000.csv").string() +
            "' --meta '" + (root / "data/scenes/scene_0000.meta.json").string() + "' --out '" +
            (root / "labels").string() + "'",
        q + " train" + sets + " --data '" + (root / "data").string() + "' --out '" +
            (root / "model").string() + "'",
        q + " eval" + sets + " --model '" + (root / "model/model.json").string() + "' --data '" +
            (root / "data").string() + "' --out '" + (root / "eval").string() + "'",
        q + " plan" + sets + " --model '" + (root / "model/model.json").string() + "' --data '" +
            (root / "data").string() + "' --scene 0 --ego 0 --out '" + (root / "plan").string() +
            "'",
        q + " plot --plan '" + (root / "plan/plan.json").string() + "' --out '" +
            (root / "plot").string() + "'",
    };
    for (const std::string& s : steps)
      if (int rc = run(s); rc != 0) {
        o.pass = false;
        o.detail = "command failed (" + std::to_string(rc) + "): " + s;
        return o;
      }
  }

  std::vector<fs::path> files;
  const fs::path a = work / "cli" / "a", b = work / "cli" / "b";
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a));
  std::sort(files.begin(), files.end());
  int differ = 0, missing = 0;
  std::string first_diff;
  for (const fs::path& f : files) {
    if (!fs::exists(b / f)) {
      ++missing;
      continue;
    }
    if (without_timings(a / f) != without_timings(b / f)) {
      if (differ++ == 0) first_diff = f.string();
    }
  }
  std::size_t in_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) in_b += e.is_regular_file();
  o.pass = differ == 0 && missing == 0 && in_b == files.size() && !files.empty();
  o.detail = std::to_string(files.size()) + " files compared across two runs; " +
             std::to_string(differ) + " differ" + (first_diff.empty() ? "" : " (" + first_diff + ")") +
             ", " + std::to_string(missing) + " missing";
  return o;
}

}  // namespace
}  // namespace mantra

int main(int argc, char** argv) {
  using namespace mantra;
  CLI::App app{"acceptance checks"};
  int only = 0;
  std::string work = "acceptance_work";
  std::string cli = MANTRA_CLI_PATH;
  app.add_option("--criterion", only, "run a single criterion (1-9)")->check(CLI::Range(0, 9));
  app.add_option("--work", work, "scratch directory for pipeline artifacts");
  app.add_option("--cli", cli, "path to the command-line tool");
  CLI11_PARSE(app, argc, argv);

  const fs::path dir = fs::absolute(work);
  fs::create_directories(dir);
  const std::vector<std::function<Outcome()>> checks{
      criterion_codec,
      criterion_gradients,
      criterion_selection,
      criterion_bvn,
      criterion_metrics,
      [&] { return criterion_end_to_end(dir); },
      [&] { return criterion_ablation(dir); },
      criterion_planner,
      [&] { return criterion_determinism(dir, cli); },
  };
  int failed = 0;
  for (int i = 1; i <= 9; ++i) {
    if (only != 0 && only != i) continue;
    Outcome o;
    try {
      o = checks[static_cast<std::size_t>(i - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << i << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
