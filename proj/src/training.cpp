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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "mantra/errors.hpp"
#include "mantra/io.hpp"
#include "mantra/kernels.hpp"

namespace mantra {

using ad::Tape;
using ad::Var;

namespace {

const double kLogFloor = std::log(kLogClamp);

// -max(log x, log floor) with its derivative gate.
double clamped_nll(double log_x, bool* active) {
  *active = log_x >= kLogFloor;
  return -std::max(log_x, kLogFloor);
}

void log_softmax(std::span<const double> z, std::span<double> out) {
  const double mx = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
}

}  // namespace

std::string_view mode_selection_name(ModeSelection s) {
  return s == ModeSelection::kMMP ? "MMP" : "MTP";
}

ModeSelection mode_selection_from_name(std::string_view s) {
  if (s == "MMP" || s == "mmp") return ModeSelection::kMMP;
  if (s == "MTP" || s == "mtp") return ModeSelection::kMTP;
  throw ConfigError("unknown mode selection '" + std::string(s) + "'");
}

double manoeuvre_type_nll(const ManoeuvrePrediction& pred, int n,
                          std::span<const ManoeuvreType> gt) {
  if (static_cast<int>(gt.size()) != pred.periods + 1)
    throw std::invalid_argument("ground-truth U has the wrong length");
  double total = 0.0;
  for (int c = 0; c <= pred.periods; ++c)
    total -= std::log(std::max(pred.type_prob(n, c, gt[static_cast<std::size_t>(c)]), kLogClamp));
  return total;
}

int select_mode_mmp(const ManoeuvrePrediction& pred, std::span<const ManoeuvreType> gt) {
  int best = 0;
  double best_v = manoeuvre_type_nll(pred, 0, gt);
  for (int n = 1; n < pred.modes; ++n) {
    const double v = manoeuvre_type_nll(pred, n, gt);
    if (v < best_v) {
      best = n;
      best_v = v;
    }
  }
  return best;
}

int select_mode_mtp(std::span<const Point2> ends, Point2 gt) {
  if (ends.empty()) throw std::invalid_argument("select_mode_mtp: no modes");
  int best = 0;
  double best_v = 0.0;
  for (std::size_t n = 0; n < ends.size(); ++n) {
    const double v = std::abs(ends[n].lon - gt.lon) + std::abs(ends[n].lat - gt.lat);
    if (n == 0 || v < best_v) {
      best = static_cast<int>(n);
      best_v = v;
    }
  }
  return best;
}

double transition_time_loss(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) throw std::invalid_argument("transition_time_loss: lengths");
  double sq = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == kNoTransition) continue;
    const double d = pred[i] - gt[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

Var traj_nll(Var raw, std::span<const Point2> prev, std::span<const Point2> truth,
             const ModelConfig& cfg) {
  const Matrix& r = raw.value();
  const std::size_t t_len = r.rows();
  if (r.cols() != 5 || prev.size() != t_len || truth.size() != t_len)
    throw std::invalid_argument("traj_nll: shape mismatch");
  const double lo = std::log(kSigmaMin);
  const double hi = std::log(kSigmaMax);
  Matrix draw(t_len, 5);  // d loss / d raw
  double total = 0.0;
  std::uint64_t bits = 0;
  for (std::size_t t = 0; t < t_len; ++t) {
    const GaussianParams g = gaussian_from_raw(r.row(t), prev[t], cfg);
    total += bvn_nll(g, truth[t]);
    const BvnGradient d = bvn_nll_gradient(g, truth[t]);
    const bool lon_free = r(t, 2) > lo && r(t, 2) < hi;
    const bool lat_free = r(t, 3) > lo && r(t, 3) < hi;
    bits = bits * 4 + (lon_free ? 1 : 0) + (lat_free ? 2 : 0);
    const double th = std::tanh(r(t, 4));
    draw(t, 0) = d.mu_lon * cfg.step_scale_lon;
    draw(t, 1) = d.mu_lat * cfg.step_scale_lat;
    draw(t, 2) = lon_free ? d.sigma_lon * g.sigma_lon : 0.0;
    draw(t, 3) = lat_free ? d.sigma_lat * g.sigma_lat : 0.0;
    draw(t, 4) = d.rho * kRhoLimit * (1.0 - th * th);
  }
  if (!std::isfinite(total)) throw NumericalError("trajectory NLL is not finite");
  Tape& tape = *raw.tape;
  tape.note_branch(bits);
  Matrix out(1, 1, total);
  return tape.record(std::move(out), {raw},
                     [raw, draw = std::move(draw)](Tape& tp, const Matrix& g) {
                       Matrix& d = tp.grad(raw);
                       for (std::size_t i = 0; i < draw.size(); ++i) d[i] += g[0] * draw[i];
                     });
}

Var manoeuvre_loss(Var logits, int modes, int periods, int winner, const ManoeuvreVector& gt,
                   double terms[3]) {
  const Matrix& z = logits.value();
  const std::size_t n = static_cast<std::size_t>(modes);
  const std::size_t slots = static_cast<std::size_t>(periods) + 1;
  const std::size_t k3 = kNumManoeuvreTypes;
  const std::size_t type0 = n + static_cast<std::size_t>(winner) * slots * k3;
  const std::size_t time0 = n + n * slots * k3 + static_cast<std::size_t>(winner) * periods;
  if (z.rows() != 1 || z.cols() != n + n * slots * k3 + n * periods)
    throw std::invalid_argument("manoeuvre_loss: logits width");
  if (winner < 0 || winner >= modes) throw std::invalid_argument("manoeuvre_loss: winner");
  if (gt.types.size() != slots || gt.times.size() != static_cast<std::size_t>(periods))
    throw std::invalid_argument("manoeuvre_loss: ground-truth vector shape");

  Matrix dz(1, z.cols());
  std::uint64_t bits = 0;
  bool active = false;

  // Mode probability of the winner.
  std::vector<double> lp(n);
  log_softmax(z.row(0).subspan(0, n), lp);
  const double l_p = clamped_nll(lp[static_cast<std::size_t>(winner)], &active);
  bits = bits * 2 + active;
  if (active)
    for (std::size_t i = 0; i < n; ++i)
      dz(0, i) = std::exp(lp[i]) - (i == static_cast<std::size_t>(winner) ? 1.0 : 0.0);

  // Manoeuvre types of the winner, one softmax per slot.
  double l_u = 0.0;
  std::vector<double> lq(k3);
  for (std::size_t c = 0; c < slots; ++c) {
    const std::size_t off = type0 + c * k3;
    log_softmax(z.row(0).subspan(off, k3), lq);
    const std::size_t k = static_cast<std::size_t>(gt.types[c]);
    l_u += clamped_nll(lq[k], &active);
    bits = bits * 2 + active;
    if (active)
      for (std::size_t j = 0; j < k3; ++j) dz(0, off + j) = std::exp(lq[j]) - (j == k ? 1.0 : 0.0);
  }

  // Masked l2 of the winner's transition times.
  std::vector<double> sig(static_cast<std::size_t>(periods));
  double sq = 0.0;
  for (std::size_t c = 0; c < sig.size(); ++c) {
    const double x = z(0, time0 + c);
    sig[c] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    if (gt.times[c] != kNoTransition) sq += (sig[c] - gt.times[c]) * (sig[c] - gt.times[c]);
  }
  const double l_v = std::sqrt(sq);
  if (l_v > 0.0)
    for (std::size_t c = 0; c < sig.size(); ++c)
      if (gt.times[c] != kNoTransition)
        dz(0, time0 + c) = (sig[c] - gt.times[c]) / l_v * sig[c] * (1.0 - sig[c]);

  if (terms != nullptr) {
    terms[0] = l_p;
    terms[1] = l_u;
    terms[2] = l_v;
  }
  Tape& tape = *logits.tape;
  tape.note_branch(bits);
  return tape.record(Matrix(1, 1, l_p + l_u + l_v), {logits},
                     [logits, dz = std::move(dz)](Tape& tp, const Matrix& g) {
                       Matrix& d = tp.grad(logits);
                       for (std::size_t i = 0; i < dz.size(); ++i) d[i] += g[0] * dz[i];
                     });
}

TrainingExample make_example(const DatasetSample& s, const Model& model) {
  const ModelConfig& cfg = model.config();
  if (static_cast<int>(s.future.size()) != cfg.t_pred ||
      static_cast<int>(s.future_labels.size()) != cfg.t_pred)
    throw DataError("sample horizon does not match the model's t_pred");
  TrainingExample ex;
  ex.obs = model.feature_stats().apply(s.features);
  ex.future = s.future;
  ex.labels = s.future_labels;
  ex.manoeuvre = encode_manoeuvre_vector(s.future_labels, cfg.horizon());
  return ex;
}

LossBreakdown sample_loss(const Model& model, const TrainingExample& ex, ModeSelection sel,
                          Gradients* grads, std::uint64_t* branch_signature) {
  const ModelConfig& cfg = model.config();
  Tape tape(grads != nullptr);
  Var memory = model.encode(tape, ex.obs);
  Var logits = model.manoeuvre_logits(tape, memory);
  const ManoeuvrePrediction mp =
      manoeuvre_prediction_from_logits(logits.value().data(), cfg.n_modes, cfg.periods());

  LossBreakdown out;
  if (sel == ModeSelection::kMMP) {
    out.winner = select_mode_mmp(mp, ex.manoeuvre.types);
  } else {
    const std::vector<ModePrediction> modes = model.decode_modes(memory.value(), mp);
    std::vector<Point2> ends;
    for (const ModePrediction& m : modes) ends.push_back(m.traj.back().mean());
    out.winner = select_mode_mtp(ends, ex.future.back());
  }
  tape.note_branch(static_cast<std::uint64_t>(out.winner) + 0x51ull);

  const std::size_t t_len = ex.future.size();
  std::vector<int> cond(t_len), heads(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    if (cfg.conditioning == DecoderConditioning::kManoeuvre) {
      cond[t] = heads[t] = static_cast<int>(ex.labels[t]);
    } else {
      cond[t] = out.winner;
      heads[t] = 0;
    }
  }
  std::vector<Point2> prev(t_len);
  for (std::size_t t = 1; t < t_len; ++t) prev[t] = ex.future[t - 1];

  Var raw = model.decode_raw(tape, memory, cond, heads, prev);
  Var lt = traj_nll(raw, prev, ex.future, cfg);
  double terms[3];
  Var lm = manoeuvre_loss(logits, cfg.n_modes, cfg.periods(), out.winner, ex.manoeuvre, terms);
  Var total = ad::add(lt, lm);

  out.traj = lt.value()(0, 0);
  out.p = terms[0];
  out.u = terms[1];
  out.v = terms[2];
  out.total = total.value()(0, 0);
  if (!std::isfinite(out.total)) throw NumericalError("non-finite sample loss");
  if (branch_signature != nullptr) *branch_signature = tape.branch_signature();

  if (grads != nullptr) {
    tape.backward(total);
    tape.for_each_parameter_grad([grads](std::size_t i, const Matrix& g) {
      Matrix& acc = (*grads)[i];
      for (std::size_t j = 0; j < g.size(); ++j) acc[j] += g[j];
    });
  }
  return out;
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be a finite non-negative number");
  if (warmup_epochs < 0) throw ConfigError("warmup_epochs must be non-negative");
  if (!(grad_clip >= 0.0)) throw ConfigError("grad_clip must be non-negative");
}

Adam::Adam(const std::vector<Parameter>& params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const Parameter& p : params) {
    m_.emplace_back(p.value.rows(), p.value.cols());
    v_.emplace_back(p.value.rows(), p.value.cols());
  }
}

void Adam::step(std::vector<Parameter>& params, const Gradients& grads, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& w = params[i].value;
    const Matrix& g = grads[i];
    Matrix& m = m_[i];
    Matrix& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
    }
  }
}

double warmup_lr(double base, long step, long warmup_steps) {
  if (warmup_steps <= 0 || step >= warmup_steps) return base;
  return base * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
}

std::vector<EpochLog> fit(Model& model, std::span<const DatasetSample> train,
                          const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train.empty()) throw DataError("training set is empty");
  if (cfg.fit_feature_stats) {
    std::vector<Matrix> obs;
    obs.reserve(train.size());
    for (const DatasetSample& s : train) obs.push_back(s.features);
    model.set_feature_stats(FeatureStats::fit(obs));
  }
  std::vector<TrainingExample> examples;
  examples.reserve(train.size());
  for (const DatasetSample& s : train) examples.push_back(make_example(s, model));

  const std::size_t n = examples.size();
  const std::size_t batch = std::min(n, static_cast<std::size_t>(cfg.batch_size));
  const long steps_per_epoch = static_cast<long>((n + batch - 1) / batch);
  const long warmup_steps = steps_per_epoch * cfg.warmup_epochs;

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Adam adam(model.parameters());
  std::vector<Gradients> per_sample(batch, model.zero_gradients());
  Gradients total = model.zero_gradients();
  std::vector<LossBreakdown> losses(batch);
  std::vector<std::exception_ptr> errors(batch);
  std::vector<EpochLog> log;
  long step = 0;
  const auto t0 = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    LossBreakdown sum;
    for (std::size_t first = 0; first < n; first += batch) {
      const std::size_t count = std::min(batch, n - first);
      const Model& frozen = model;
#pragma omp parallel for schedule(dynamic)
      for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(count); ++b) {
        const std::size_t bi = static_cast<std::size_t>(b);
        try {
          for (Matrix& g : per_sample[bi]) g.fill(0.0);
          losses[bi] = sample_loss(frozen, examples[order[first + bi]], cfg.selection,
                                   &per_sample[bi]);
        } catch (...) {
          errors[bi] = std::current_exception();
        }
      }
      for (std::size_t b = 0; b < count; ++b) {
        if (!errors[b]) continue;
        try {
          std::rethrow_exception(errors[b]);
        } catch (const std::exception& e) {
          throw NumericalError("epoch " + std::to_string(epoch) + ", sample " +
                               std::to_string(order[first + b]) + ": " + e.what());
        }
      }
      // Fixed-order reduction keeps the update independent of scheduling.
      std::vector<std::span<const double>> parts(count);
      const double inv = 1.0 / static_cast<double>(count);
      double norm_sq = 0.0;
      for (std::size_t p = 0; p < total.size(); ++p) {
        for (std::size_t b = 0; b < count; ++b) parts[b] = per_sample[b][p].data();
        kernels::sum_ordered(parts, total[p].data());
        for (double& g : total[p].data()) {
          g *= inv;
          norm_sq += g * g;
        }
      }
      if (!std::isfinite(norm_sq)) throw NumericalError("non-finite gradient");
      if (cfg.grad_clip > 0.0 && std::sqrt(norm_sq) > cfg.grad_clip) {
        const double s = cfg.grad_clip / std::sqrt(norm_sq);
        for (Matrix& g : total)
          for (double& v : g.data()) v *= s;
      }
      adam.step(model.parameters(), total, warmup_lr(cfg.learning_rate, step, warmup_steps));
      ++step;
      for (std::size_t b = 0; b < count; ++b) {
        sum.traj += losses[b].traj;
        sum.p += losses[b].p;
        sum.u += losses[b].u;
        sum.v += losses[b].v;
        sum.total += losses[b].total;
      }
    }
    EpochLog e;
    e.epoch = epoch;
    const double dn = static_cast<double>(n);
    e.mean = {sum.traj / dn, sum.p / dn, sum.u / dn, sum.v / dn, sum.total / dn, 0};
    e.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.push_back(e);
    if (on_epoch) on_epoch(e);
  }
  return log;
}

void write_loss_csv(std::ostream& out, std::span<const EpochLog> log) {
  out << "epoch,L_total,L_traj,L_p,L_U,L_V,wall_time_s\n";
  for (const EpochLog& e : log) {
    out << e.epoch << ',' << io::format_double(e.mean.total) << ','
        << io::format_double(e.mean.traj) << ',' << io::format_double(e.mean.p) << ','
        << io::format_double(e.mean.u) << ',' << io::format_double(e.mean.v) << ','
        << io::format_double(e.wall_time_s) << '\n';
  }
}

}  // namespace mantra
