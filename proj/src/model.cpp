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

#include "mantra/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>

#include "mantra/errors.hpp"

namespace mantra {

using ad::Tape;
using ad::Var;

namespace {

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

void softmax_into(std::span<const double> logits, std::span<double> out) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  for (double& v : out) v /= total;
}

// Scaled dot-product attention over projected inputs, split into heads.
Var attend(Var q, Var k, Var v, int n_heads, bool causal) {
  const std::size_t d = q.cols();
  const std::size_t dk = d / static_cast<std::size_t>(n_heads);
  const double s = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(n_heads));
  for (int h = 0; h < n_heads; ++h) {
    const std::size_t off = static_cast<std::size_t>(h) * dk;
    Var qh = ad::slice_cols(q, off, dk);
    Var kh = ad::slice_cols(k, off, dk);
    Var vh = ad::slice_cols(v, off, dk);
    Var w = ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), s), causal);
    heads.push_back(ad::matmul(w, vh));
  }
  return n_heads == 1 ? heads[0] : ad::concat_cols(heads);
}

Matrix append_row(const Matrix& m, std::span<const double> r) {
  Matrix out(m.rows() + 1, r.size());
  std::copy(m.data().begin(), m.data().end(), out.data().begin());
  std::copy(r.begin(), r.end(), out.row(m.rows()).begin());
  return out;
}

}  // namespace

ModelConfig ModelConfig::large() {
  ModelConfig c;
  c.d_model = 512;
  c.n_heads = 8;
  c.d_ff = 128;
  c.mlp_hidden = 256;
  return c;
}

void ModelConfig::validate() const {
  if (d_model < 1 || n_heads < 1 || d_model % n_heads != 0)
    throw ConfigError("d_model must be a positive multiple of n_heads");
  if (n_layers < 1 || d_ff < 1 || mlp_hidden < 1)
    throw ConfigError("layer sizes must be positive");
  if (n_modes < 1) throw ConfigError("n_modes must be at least 1");
  if (t_obs < 1 || t_pred < 1 || t_change < 1 || fps < 1)
    throw ConfigError("horizon settings must be positive");
  if (n_features < 1) throw ConfigError("n_features must be positive");
  if (!(step_scale_lon > 0 && step_scale_lat > 0 && pos_scale_lon > 0 && pos_scale_lat > 0))
    throw ConfigError("model scales must be positive");
}

ManoeuvreVector ManoeuvrePrediction::hardened(int n) const {
  ManoeuvreVector mv;
  mv.types.resize(static_cast<std::size_t>(periods) + 1);
  mv.times.assign(static_cast<std::size_t>(periods), kNoTransition);
  for (int c = 0; c <= periods; ++c) {
    ManoeuvreType best = ManoeuvreType::kLaneKeep;
    for (ManoeuvreType k : kAllManoeuvreTypes)
      if (type_prob(n, c, k) > type_prob(n, c, best)) best = k;
    mv.types[static_cast<std::size_t>(c)] = best;
  }
  for (int c = 0; c < periods; ++c)
    if (mv.types[static_cast<std::size_t>(c)] != mv.types[static_cast<std::size_t>(c) + 1])
      mv.times[static_cast<std::size_t>(c)] = transition_time(n, c);
  return mv;
}

ManoeuvrePrediction manoeuvre_prediction_from_logits(std::span<const double> logits, int modes,
                                                     int periods) {
  const std::size_t n = static_cast<std::size_t>(modes);
  const std::size_t slots = n * static_cast<std::size_t>(periods + 1);
  const std::size_t expected = n + slots * kNumManoeuvreTypes + n * periods;
  if (logits.size() != expected)
    throw std::invalid_argument("manoeuvre logits have the wrong width");
  ManoeuvrePrediction p;
  p.modes = modes;
  p.periods = periods;
  p.mode_probs.resize(n);
  softmax_into(logits.subspan(0, n), p.mode_probs);
  p.type_probs.resize(slots * kNumManoeuvreTypes);
  for (std::size_t s = 0; s < slots; ++s)
    softmax_into(logits.subspan(n + s * kNumManoeuvreTypes, kNumManoeuvreTypes),
                 std::span<double>(p.type_probs).subspan(s * kNumManoeuvreTypes,
                                                         kNumManoeuvreTypes));
  const std::size_t t0 = n + slots * kNumManoeuvreTypes;
  p.transition_times.resize(n * periods);
  for (std::size_t i = 0; i < p.transition_times.size(); ++i)
    p.transition_times[i] = sigmoid(logits[t0 + i]);
  return p;
}

std::vector<Point2> ModePrediction::mean_trajectory() const {
  std::vector<Point2> out;
  out.reserve(traj.size());
  for (const GaussianParams& g : traj) out.push_back(g.mean());
  return out;
}

Matrix positional_encoding(std::size_t rows, std::size_t d) {
  Matrix pe(rows, d);
  for (std::size_t pos = 0; pos < rows; ++pos) {
    for (std::size_t i = 0; 2 * i < d; ++i) {
      const double angle = static_cast<double>(pos) /
                           std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d));
      pe(pos, 2 * i) = std::sin(angle);
      if (2 * i + 1 < d) pe(pos, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

GaussianParams gaussian_from_raw(std::span<const double> raw, Point2 prev,
                                 const ModelConfig& cfg) {
  const double lo = std::log(kSigmaMin);
  const double hi = std::log(kSigmaMax);
  GaussianParams g;
  g.mu_lon = prev.lon + cfg.step_scale_lon * raw[0];
  g.mu_lat = prev.lat + cfg.step_scale_lat * raw[1];
  g.sigma_lon = std::exp(std::clamp(raw[2], lo, hi));
  g.sigma_lat = std::exp(std::clamp(raw[3], lo, hi));
  g.rho = kRhoLimit * std::tanh(raw[4]);
  return g;
}

// ---------------------------------------------------------------------------

Model::Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  build_layout();
  initialise(seed);
  stats_ = FeatureStats::identity(cfg_.n_features);
}

Model::Model(const ModelConfig& cfg, std::vector<Parameter> params, FeatureStats stats)
    : cfg_(cfg), stats_(std::move(stats)) {
  cfg_.validate();
  build_layout();
  if (params.size() != params_.size())
    throw ConfigError("checkpoint has " + std::to_string(params.size()) +
                      " tensors, layout expects " + std::to_string(params_.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != params_[i].name || !params[i].value.same_shape(params_[i].value))
      throw ConfigError("checkpoint tensor '" + params[i].name + "' does not match layout");
  }
  params_ = std::move(params);
  if (stats_.empty()) stats_ = FeatureStats::identity(cfg_.n_features);
  if (static_cast<int>(stats_.mean.size()) != cfg_.n_features)
    throw ConfigError("feature statistics width does not match n_features");
}

std::size_t Model::add(const std::string& name, std::size_t rows, std::size_t cols) {
  params_.push_back({name, Matrix(rows, cols)});
  return params_.size() - 1;
}

Model::Linear Model::add_linear(const std::string& name, std::size_t in, std::size_t out) {
  return {add(name + ".w", in, out), add(name + ".b", 1, out)};
}

Model::Norm Model::add_norm(const std::string& name, std::size_t dim) {
  Norm n{add(name + ".gain", 1, dim), add(name + ".bias", 1, dim)};
  params_[n.gain].value.fill(1.0);
  return n;
}

Model::Attention Model::add_attention(const std::string& name) {
  const std::size_t d = static_cast<std::size_t>(cfg_.d_model);
  return {add_linear(name + ".q", d, d), add_linear(name + ".k", d, d),
          add_linear(name + ".v", d, d), add_linear(name + ".o", d, d)};
}

void Model::build_layout() {
  params_.clear();
  const std::size_t d = static_cast<std::size_t>(cfg_.d_model);
  const std::size_t ff = static_cast<std::size_t>(cfg_.d_ff);
  enc_embed_ = add_linear("enc.embed", static_cast<std::size_t>(cfg_.n_features), d);
  enc_.clear();
  for (int l = 0; l < cfg_.n_layers; ++l) {
    const std::string p = "enc." + std::to_string(l);
    EncoderLayer e;
    e.self = add_attention(p + ".self");
    e.norm1 = add_norm(p + ".norm1", d);
    e.ff1 = add_linear(p + ".ff1", d, ff);
    e.ff2 = add_linear(p + ".ff2", ff, d);
    e.norm2 = add_norm(p + ".norm2", d);
    enc_.push_back(e);
  }
  mlp1_ = add_linear("man.fc1", d, static_cast<std::size_t>(cfg_.mlp_hidden));
  mlp2_ = add_linear("man.fc2", static_cast<std::size_t>(cfg_.mlp_hidden),
                     static_cast<std::size_t>(cfg_.manoeuvre_outputs()));
  dec_embed_ = add_linear("dec.embed", 2 + static_cast<std::size_t>(cfg_.cond_dim()), d);
  start_token_ = add("dec.start", 1, d);
  dec_.clear();
  for (int l = 0; l < cfg_.n_layers; ++l) {
    const std::string p = "dec." + std::to_string(l);
    DecoderLayer e;
    e.self = add_attention(p + ".self");
    e.norm1 = add_norm(p + ".norm1", d);
    e.cross = add_attention(p + ".cross");
    e.norm2 = add_norm(p + ".norm2", d);
    e.ff1 = add_linear(p + ".ff1", d, ff);
    e.ff2 = add_linear(p + ".ff2", ff, d);
    e.norm3 = add_norm(p + ".norm3", d);
    dec_.push_back(e);
  }
  heads_.clear();
  for (int k = 0; k < cfg_.head_count(); ++k)
    heads_.push_back(add_linear("head." + std::to_string(k), d, 5));
}

void Model::initialise(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (Parameter& p : params_) {
    const std::string& n = p.name;
    const bool is_weight = n.size() > 2 && n.compare(n.size() - 2, 2, ".w") == 0;
    if (is_weight) {
      const double limit =
          std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (double& v : p.value.data()) v = u(rng);
    } else if (n == "dec.start") {
      std::uniform_real_distribution<double> u(-0.1, 0.1);
      for (double& v : p.value.data()) v = u(rng);
    }
  }
  if (cfg_.type_prior != 0.0) {
    auto it = std::find_if(params_.begin(), params_.end(),
                           [](const Parameter& q) { return q.name == "man.fc2.b"; });
    const std::span<double> b = it->value.data();
    const std::size_t n = static_cast<std::size_t>(cfg_.n_modes);
    const std::size_t slots = static_cast<std::size_t>(cfg_.periods() + 1);
    const auto lk = static_cast<std::size_t>(ManoeuvreType::kLaneKeep);
    for (std::size_t s = 0; s < slots; ++s) b[n + s * kNumManoeuvreTypes + lk] = cfg_.type_prior;
  }}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.size();
  return n;
}

Gradients Model::zero_gradients() const {
  Gradients g;
  g.reserve(params_.size());
  for (const Parameter& p : params_) g.emplace_back(p.value.rows(), p.value.cols());
  return g;
}

Var Model::param(Tape& tape, std::size_t index) const {
  return tape.parameter(index, params_[index].value);
}

Var Model::linear(Tape& tape, Var x, const Linear& l) const {
  return ad::add_row(ad::matmul(x, param(tape, l.w)), param(tape, l.b));
}

Var Model::norm(Tape& tape, Var x, const Norm& n) const {
  return ad::layer_norm(x, param(tape, n.gain), param(tape, n.bias));
}

Var Model::attention(Tape& tape, const Attention& a, Var query_in, Var kv_in,
                     bool causal) const {
  Var q = linear(tape, query_in, a.q);
  Var k = linear(tape, kv_in, a.k);
  Var v = linear(tape, kv_in, a.v);
  return linear(tape, attend(q, k, v, cfg_.n_heads, causal), a.o);
}

Var Model::feed_forward(Tape& tape, Var x, const Linear& ff1, const Linear& ff2) const {
  return linear(tape, ad::relu(linear(tape, x, ff1)), ff2);
}

Var Model::encode(Tape& tape, const Matrix& obs) const {
  if (obs.rows() != static_cast<std::size_t>(cfg_.t_obs) ||
      obs.cols() != static_cast<std::size_t>(cfg_.n_features))
    throw std::invalid_argument("observation must be t_obs x n_features");
  if (!obs.all_finite()) throw NumericalError("observation contains non-finite values");
  Var x = linear(tape, tape.constant(obs), enc_embed_);
  x = ad::add_constant(x, positional_encoding(obs.rows(), static_cast<std::size_t>(cfg_.d_model)));
  for (const EncoderLayer& e : enc_) {
    x = norm(tape, ad::add(x, attention(tape, e.self, x, x, false)), e.norm1);
    x = norm(tape, ad::add(x, feed_forward(tape, x, e.ff1, e.ff2)), e.norm2);
  }
  return x;
}

Var Model::manoeuvre_logits(Tape& tape, Var memory) const {
  Var last = ad::row(memory, memory.rows() - 1);
  return linear(tape, ad::relu(linear(tape, last, mlp1_)), mlp2_);
}

Matrix Model::tokens(std::span<const int> cond, std::span<const Point2> prev) const {
  const std::size_t cd = static_cast<std::size_t>(cfg_.cond_dim());
  Matrix x(cond.size(), 2 + cd);
  for (std::size_t t = 0; t < cond.size(); ++t) {
    if (cond[t] < 0 || static_cast<std::size_t>(cond[t]) >= cd)
      throw std::invalid_argument("decoder conditioning index out of range");
    x(t, 0) = prev[t].lon / cfg_.pos_scale_lon;
    x(t, 1) = prev[t].lat / cfg_.pos_scale_lat;
    x(t, 2 + static_cast<std::size_t>(cond[t])) = 1.0;
  }
  return x;
}

Var Model::decode_raw(Tape& tape, Var memory, std::span<const int> cond,
                      std::span<const int> heads, std::span<const Point2> prev) const {
  const std::size_t t_len = cond.size();
  if (t_len == 0 || heads.size() != t_len || prev.size() != t_len)
    throw std::invalid_argument("decoder inputs must share a non-zero length");
  Var x = linear(tape, tape.constant(tokens(cond, prev)), dec_embed_);
  x = ad::add_to_row(x, 0, param(tape, start_token_));
  x = ad::add_constant(x, positional_encoding(t_len, static_cast<std::size_t>(cfg_.d_model)));
  for (const DecoderLayer& l : dec_) {
    x = norm(tape, ad::add(x, attention(tape, l.self, x, x, true)), l.norm1);
    x = norm(tape, ad::add(x, attention(tape, l.cross, x, memory, false)), l.norm2);
    x = norm(tape, ad::add(x, feed_forward(tape, x, l.ff1, l.ff2)), l.norm3);
  }
  std::vector<Var> outs;
  for (const Linear& h : heads_) outs.push_back(linear(tape, x, h));
  return ad::route_rows(outs, heads);
}

Matrix Model::encode(const Matrix& obs) const {
  Tape tape(false);
  return encode(tape, obs).value();
}

ManoeuvrePrediction Model::predict_manoeuvres(const Matrix& memory) const {
  Tape tape(false);
  Var logits = manoeuvre_logits(tape, tape.constant(memory));
  return manoeuvre_prediction_from_logits(logits.value().data(), cfg_.n_modes, cfg_.periods());
}

std::vector<GaussianParams> Model::decode_teacher_forced(const Matrix& memory,
                                                         std::span<const ManoeuvreType> labels,
                                                         std::span<const Point2> truth,
                                                         int mode) const {
  const std::size_t t_len = labels.size();
  if (truth.size() != t_len) throw std::invalid_argument("labels and trajectory lengths differ");
  std::vector<int> cond(t_len), heads(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    const int k = static_cast<int>(labels[t]);
    const bool by_type = cfg_.conditioning == DecoderConditioning::kManoeuvre;
    cond[t] = by_type ? k : mode;
    heads[t] = by_type ? k : 0;
  }
  std::vector<Point2> prev(t_len);
  for (std::size_t t = 1; t < t_len; ++t) prev[t] = truth[t - 1];
  Tape tape(false);
  const Matrix& raw = decode_raw(tape, tape.constant(memory), cond, heads, prev).value();
  std::vector<GaussianParams> out;
  out.reserve(t_len);
  for (std::size_t t = 0; t < t_len; ++t) out.push_back(gaussian_from_raw(raw.row(t), prev[t], cfg_));
  return out;
}

std::vector<GaussianParams> Model::rollout(const Matrix& memory, std::span<const int> cond,
                                           std::span<const int> heads) const {
  const std::size_t t_len = cond.size();
  if (heads.size() != t_len) throw std::invalid_argument("rollout: cond/heads length mismatch");
  const std::size_t d = static_cast<std::size_t>(cfg_.d_model);
  const Matrix pe = positional_encoding(t_len, d);
  Tape tape(false);
  Var mem = tape.constant(memory);
  // Cross-attention keys and values depend on the memory only.
  std::vector<Var> cross_k, cross_v;
  for (const DecoderLayer& l : dec_) {
    cross_k.push_back(linear(tape, mem, l.cross.k));
    cross_v.push_back(linear(tape, mem, l.cross.v));
  }
  std::vector<Matrix> self_k(dec_.size(), Matrix(0, d)), self_v(dec_.size(), Matrix(0, d));
  std::vector<GaussianParams> out;
  out.reserve(t_len);
  Point2 prev{0.0, 0.0};
  Matrix pe_row(1, d);
  for (std::size_t t = 0; t < t_len; ++t) {
    const int c = cond[t];
    Var x = linear(tape, tape.constant(tokens(std::span<const int>(&c, 1),
                                              std::span<const Point2>(&prev, 1))),
                   dec_embed_);
    if (t == 0) x = ad::add_to_row(x, 0, param(tape, start_token_));
    std::copy(pe.row(t).begin(), pe.row(t).end(), pe_row.row(0).begin());
    x = ad::add_constant(x, pe_row);
    for (std::size_t li = 0; li < dec_.size(); ++li) {
      const DecoderLayer& l = dec_[li];
      Var q = linear(tape, x, l.self.q);
      self_k[li] = append_row(self_k[li], linear(tape, x, l.self.k).value().row(0));
      self_v[li] = append_row(self_v[li], linear(tape, x, l.self.v).value().row(0));
      Var sa = attend(q, tape.constant(self_k[li]), tape.constant(self_v[li]), cfg_.n_heads,
                      false);
      x = norm(tape, ad::add(x, linear(tape, sa, l.self.o)), l.norm1);
      Var cq = linear(tape, x, l.cross.q);
      Var ca = attend(cq, cross_k[li], cross_v[li], cfg_.n_heads, false);
      x = norm(tape, ad::add(x, linear(tape, ca, l.cross.o)), l.norm2);
      x = norm(tape, ad::add(x, feed_forward(tape, x, l.ff1, l.ff2)), l.norm3);
    }
    const int h = heads[t];
    if (h < 0 || static_cast<std::size_t>(h) >= heads_.size())
      throw std::invalid_argument("rollout: head index out of range");
    Var raw = linear(tape, x, heads_[static_cast<std::size_t>(h)]);
    out.push_back(gaussian_from_raw(raw.value().row(0), prev, cfg_));
    prev = out.back().mean();
  }
  return out;
}

void Model::routing(const ModePrediction& mode, std::vector<int>* cond,
                    std::vector<int>* heads) const {
  const std::size_t t_len = mode.step_labels.size();
  cond->resize(t_len);
  heads->resize(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    if (cfg_.conditioning == DecoderConditioning::kManoeuvre) {
      (*cond)[t] = (*heads)[t] = static_cast<int>(mode.step_labels[t]);
    } else {
      (*cond)[t] = mode.mode;
      (*heads)[t] = 0;
    }
  }
}

std::vector<ModePrediction> Model::infer(const Matrix& raw_obs) const {
  return infer_standardized(stats_.apply(raw_obs));
}

std::vector<ModePrediction> Model::infer_standardized(const Matrix& obs) const {
  const Matrix memory = encode(obs);
  std::vector<ModePrediction> modes = decode_modes(memory, predict_manoeuvres(memory));
  std::stable_sort(modes.begin(), modes.end(),
                   [](const ModePrediction& a, const ModePrediction& b) { return a.prob > b.prob; });
  return modes;
}

std::vector<ModePrediction> Model::decode_modes(const Matrix& memory,
                                                const ManoeuvrePrediction& mp) const {
  const HorizonConfig hz = cfg_.horizon();
  std::vector<ModePrediction> modes(static_cast<std::size_t>(cfg_.n_modes));
  for (int n = 0; n < cfg_.n_modes; ++n) {
    ModePrediction& m = modes[static_cast<std::size_t>(n)];
    m.mode = n;
    m.prob = mp.mode_probs[static_cast<std::size_t>(n)];
    m.manoeuvre = mp.hardened(n);
    m.step_labels = decode_manoeuvre_vector(m.manoeuvre, hz);
    std::vector<int> cond;
    routing(m, &cond, &m.heads);
    m.traj = rollout(memory, cond, m.heads);
  }
  return modes;
}

}  // namespace mantra
