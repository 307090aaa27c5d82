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

#include "mantra/training.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "gradcheck.hpp"
#include "mantra/errors.hpp"

namespace mantra {
namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.d_ff = 6;
  c.mlp_hidden = 8;
  c.n_modes = 2;
  c.t_obs = 4;
  c.t_pred = 5;
  c.t_change = 3;
  return c;
}

TrainingExample random_example(const ModelConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  TrainingExample ex;
  ex.obs = Matrix(static_cast<std::size_t>(cfg.t_obs), static_cast<std::size_t>(cfg.n_features));
  for (double& v : ex.obs.data()) v = n01(rng);
  // One lane change somewhere in the horizon, or none.
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

TEST_CASE("bvn_nll reference values") {
  GaussianParams g;
  CHECK(bvn_nll(g, {0.0, 0.0}) == doctest::Approx(std::log(2.0 * M_PI)).epsilon(1e-12));
  CHECK(bvn_nll(g, {1.0, 0.0}) == doctest::Approx(std::log(2.0 * M_PI) + 0.5).epsilon(1e-12));
  g.sigma_lat = 0.0;
  CHECK_THROWS_AS(bvn_nll(g, {0.0, 0.0}), NumericalError);
}

TEST_CASE("traj_loss equals minus log of the multiplied densities") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<GaussianParams> steps;
  std::vector<Point2> truth;
  double product = 1.0;
  for (int t = 0; t < 5; ++t) {
    GaussianParams g{u(rng), u(rng), 0.5 + std::abs(u(rng)), 0.5 + std::abs(u(rng)), 0.8 * u(rng)};
    const Point2 y{u(rng), u(rng)};
    const double dx = (y.lon - g.mu_lon) / g.sigma_lon;
    const double dy = (y.lat - g.mu_lat) / g.sigma_lat;
    const double q = 1.0 - g.rho * g.rho;
    product *= std::exp(-(dx * dx - 2 * g.rho * dx * dy + dy * dy) / (2 * q)) /
               (2 * M_PI * g.sigma_lon * g.sigma_lat * std::sqrt(q));
    steps.push_back(g);
    truth.push_back(y);
  }
  CHECK(std::abs(traj_loss(steps, truth) + std::log(product)) < 1e-9);
  CHECK_THROWS(traj_loss(steps, std::span<const Point2>(truth).first(4)));
}

TEST_CASE("manoeuvre_type_nll small cases") {
  ManoeuvrePrediction p;
  p.modes = 1;
  p.periods = 2;
  p.mode_probs = {1.0};
  p.type_probs.assign(9, 1.0 / 3.0);
  p.transition_times = {0.5, 0.5};
  const std::vector<ManoeuvreType> gt(3, ManoeuvreType::kLaneKeep);
  CHECK(manoeuvre_type_nll(p, 0, gt) == doctest::Approx(3.0 * std::log(3.0)));
  p.type_probs = {1, 0, 0, 1, 0, 0, 1, 0, 0};
  CHECK(manoeuvre_type_nll(p, 0, gt) == 0.0);
  // A zero probability is clamped rather than infinite.
  const std::vector<ManoeuvreType> miss(3, ManoeuvreType::kLeftChange);
  CHECK(manoeuvre_type_nll(p, 0, miss) == doctest::Approx(-3.0 * std::log(1e-12)));
}

TEST_CASE("transition_time_loss masks absent transitions") {
  const std::vector<double> none{-1.0, -1.0};
  const std::vector<double> pred{0.1, 0.9};
  CHECK(transition_time_loss(pred, none) == 0.0);
  const std::vector<double> one{0.4, -1.0};
  CHECK(transition_time_loss(pred, one) == doctest::Approx(0.3));
}

TEST_CASE("mode selection small cases") {
  const std::vector<Point2> ends{{0, 0}, {10, 0}};
  CHECK(select_mode_mtp(ends, {1, 0}) == 0);
  CHECK(select_mode_mtp(ends, {10, 0}) == 1);
  CHECK(select_mode_mtp(std::vector<Point2>{{1, 0}, {-1, 0}}, {0, 0}) == 0);  // tie

  ManoeuvrePrediction p;
  p.modes = 3;
  p.periods = 1;
  p.mode_probs = {0.2, 0.3, 0.5};
  p.type_probs.assign(3 * 2 * 3, 1.0 / 3.0);
  p.transition_times.assign(3, 0.5);
  const std::vector<ManoeuvreType> gt{ManoeuvreType::kLaneKeep, ManoeuvreType::kLeftChange};
  CHECK(select_mode_mmp(p, gt) == 0);  // all tied
  for (int c = 0; c < 2; ++c)
    for (int k = 0; k < 3; ++k)
      p.type_probs[static_cast<std::size_t>((1 * 2 + c) * 3 + k)] =
          k == static_cast<int>(gt[static_cast<std::size_t>(c)]) ? 1.0 : 0.0;
  CHECK(select_mode_mmp(p, gt) == 1);
}

TEST_CASE("single mode with perfect manoeuvres leaves only the trajectory term") {
  ModelConfig cfg = tiny_config();
  cfg.n_modes = 1;
  Model model(cfg, 1);
  std::mt19937_64 rng(1);
  TrainingExample ex = random_example(cfg, rng);
  ex.labels.assign(5, ManoeuvreType::kLaneKeep);
  ex.manoeuvre = encode_manoeuvre_vector(ex.labels, cfg.horizon());
  // Force the generator to predict LK with certainty.
  for (Parameter& p : model.parameters()) {
    if (p.name != "man.fc2.b") continue;
    p.value.fill(0.0);
    const int slots = cfg.periods() + 1;
    for (int c = 0; c < slots; ++c) p.value[static_cast<std::size_t>(1 + c * 3)] = 60.0;
  }
  for (Parameter& p : model.parameters())
    if (p.name == "man.fc2.w") p.value.fill(0.0);
  const LossBreakdown l = sample_loss(model, ex, ModeSelection::kMMP, nullptr);
  CHECK(l.p == 0.0);
  CHECK(l.u < 1e-20);
  CHECK(l.v == 0.0);
  CHECK(std::abs(l.total - l.traj) < 1e-20);
}

TEST_CASE("loss terms add up to the total") {
  const ModelConfig cfg = tiny_config();
  Model model(cfg, 5);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const TrainingExample ex = random_example(cfg, rng);
    for (ModeSelection sel : {ModeSelection::kMMP, ModeSelection::kMTP}) {
      const LossBreakdown l = sample_loss(model, ex, sel, nullptr);
      CHECK(std::abs(l.total - (l.traj + l.p + l.u + l.v)) < 1e-9);
      CHECK(l.winner >= 0);
      CHECK(l.winner < cfg.n_modes);
    }
  }
}

TEST_CASE("non-winning type logits do not move L_U or L_V") {
  const ModelConfig cfg = tiny_config();
  Model model(cfg, 9);
  std::mt19937_64 rng(9);
  const TrainingExample ex = random_example(cfg, rng);
  const LossBreakdown before = sample_loss(model, ex, ModeSelection::kMMP, nullptr);
  const int loser = 1 - before.winner;
  for (Parameter& p : model.parameters()) {
    if (p.name != "man.fc2.b") continue;
    // Type slot biases and transition biases of the losing mode.
    const std::size_t n = 2, slots = 3;
    for (std::size_t k = 0; k < slots * 3; ++k)
      p.value[n + static_cast<std::size_t>(loser) * slots * 3 + k] += 1e-3 * static_cast<double>(k % 3);
    p.value[n + n * slots * 3 + static_cast<std::size_t>(loser) * 2] += 0.01;
  }
  const LossBreakdown after = sample_loss(model, ex, ModeSelection::kMMP, nullptr);
  REQUIRE(after.winner == before.winner);
  CHECK(after.u == before.u);
  CHECK(after.v == before.v);
}

TEST_CASE("analytic gradients match finite differences") {
  const ModelConfig cfg = tiny_config();
  for (std::uint64_t seed : {11u, 12u}) {
    Model model(cfg, seed);
    std::mt19937_64 rng(seed);
    const TrainingExample ex = random_example(cfg, rng);
    for (ModeSelection sel : {ModeSelection::kMMP, ModeSelection::kMTP}) {
      const testing::GradCheckResult r = testing::check_gradients(model, ex, sel);
      INFO("seed " << seed << " " << mode_selection_name(sel) << " worst " << r.worst
                   << " skipped " << r.skipped);
      CHECK(r.max_rel_error < 1e-3);
      CHECK(r.checked > r.skipped * 20);
    }
  }
}

TEST_CASE("Adam with zero learning rate leaves parameters unchanged") {
  const ModelConfig cfg = tiny_config();
  Model model(cfg, 2);
  const std::vector<Parameter> before = model.parameters();
  Adam adam(model.parameters());
  Gradients g = model.zero_gradients();
  for (Matrix& m : g) m.fill(0.7);
  adam.step(model.parameters(), g, 0.0);
  for (std::size_t i = 0; i < before.size(); ++i)
    CHECK(before[i].value == model.parameters()[i].value);
}

TEST_CASE("warmup ramps linearly") {
  CHECK(warmup_lr(1e-3, 0, 10) == doctest::Approx(1e-4));
  CHECK(warmup_lr(1e-3, 9, 10) == doctest::Approx(1e-3));
  CHECK(warmup_lr(1e-3, 50, 10) == 1e-3);
  CHECK(warmup_lr(1e-3, 0, 0) == 1e-3);
}

TEST_CASE("loss CSV header") {
  std::ostringstream os;
  EpochLog e;
  e.epoch = 1;
  e.mean.total = 2.5;
  write_loss_csv(os, std::vector<EpochLog>{e});
  CHECK(os.str().rfind("epoch,L_total,L_traj,L_p,L_U,L_V,wall_time_s\n1,2.5,", 0) == 0);
}

}  // namespace
}  // namespace mantra
