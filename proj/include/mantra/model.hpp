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

// Transformer encoder over the observation window, a manoeuvre generator
// producing N manoeuvre vectors with probabilities, and a transformer
// decoder whose per-step output goes through a manoeuvre-specific
// bivariate-Gaussian head.
//
// Decoder token t carries the previous TV-relative position (scaled) and a
// one-hot conditioning code: the manoeuvre type at step t, or the mode
// index for the mode-conditioned (MTP ablation) variant, which also uses a
// single shared head. Token 0 adds a learned start vector. Head outputs are
// per-step displacements added to the previous position.

#ifndef MANTRA_MODEL_HPP_
#define MANTRA_MODEL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mantra/autodiff.hpp"
#include "mantra/features.hpp"
#include "mantra/gaussian.hpp"
#include "mantra/geometry.hpp"
#include "mantra/manoeuvre.hpp"
#include "mantra/matrix.hpp"

namespace mantra {

enum class DecoderConditioning { kManoeuvre, kMode };

struct ModelConfig {
  int d_model = 64;
  int n_heads = 4;
  int n_layers = 1;
  int d_ff = 32;
  int mlp_hidden = 64;
  int n_modes = 3;
  int t_obs = 15;
  int t_pred = 25;
  int t_change = 13;
  int fps = 5;
  int n_features = kNumFeatures;
  DecoderConditioning conditioning = DecoderConditioning::kManoeuvre;
  // Head displacement units and decoder input scaling, in metres.
  double step_scale_lon = 4.0;
  double step_scale_lat = 0.25;
  double pos_scale_lon = 50.0;
  double pos_scale_lat = 2.0;
  // Initial logit bias towards lane keeping in every slot of mode 0. With
  // symmetric modes one mode tends to absorb both "keep" and "keep, then
  // change" futures and no pure lane-keeping hypothesis survives; starting
  // mode 0 as lane keeping avoids that. 0 disables.
  double type_prior = 2.0;

  // Dimensions used for the large configuration (512 / 8 heads / 128 / 256).
  static ModelConfig large();

  int periods() const { return num_change_periods(t_pred, t_change); }
  int head_count() const {
    return conditioning == DecoderConditioning::kManoeuvre ? kNumManoeuvreTypes : 1;
  }
  int cond_dim() const {
    return conditioning == DecoderConditioning::kManoeuvre ? kNumManoeuvreTypes : n_modes;
  }
  int manoeuvre_outputs() const {
    return n_modes + n_modes * (periods() + 1) * kNumManoeuvreTypes + n_modes * periods();
  }
  HorizonConfig horizon() const { return {t_pred, t_change, fps}; }
  void validate() const;  // throws ConfigError
};

struct Parameter {
  std::string name;
  Matrix value;
};

using Gradients = std::vector<Matrix>;

struct ManoeuvrePrediction {
  int modes = 0;
  int periods = 0;
  std::vector<double> mode_probs;        // N
  std::vector<double> type_probs;        // N x (C+1) x 3
  std::vector<double> transition_times;  // N x C, in [0,1]

  double type_prob(int n, int c, ManoeuvreType k) const {
    return type_probs[(static_cast<std::size_t>(n) * (periods + 1) + c) * kNumManoeuvreTypes +
                      static_cast<std::size_t>(k)];
  }
  double transition_time(int n, int c) const {
    return transition_times[static_cast<std::size_t>(n) * periods + c];
  }
  // Per-slot argmax (ties to the lower type) plus the transition times,
  // with -1 where consecutive types agree.
  ManoeuvreVector hardened(int n) const;
};

// Splits the raw generator output (1 x manoeuvre_outputs) into groups and
// applies softmax / logistic squashing.
ManoeuvrePrediction manoeuvre_prediction_from_logits(std::span<const double> logits, int modes,
                                                     int periods);

struct ModePrediction {
  int mode = 0;  // index in the generator output
  double prob = 0.0;
  ManoeuvreVector manoeuvre;
  LabelSequence step_labels;  // decoded from `manoeuvre`
  std::vector<int> heads;     // head used at each step
  std::vector<GaussianParams> traj;

  std::vector<Point2> mean_trajectory() const;
};

// Sinusoidal encoding: (pos, 2i) -> sin(pos / 10000^(2i/d)), (pos, 2i+1) ->
// cos of the same angle.
Matrix positional_encoding(std::size_t rows, std::size_t d_model);

// Maps a raw head row (dlon, dlat, log sigma_lon, log sigma_lat, rho_raw)
// to Gaussian parameters around `prev`.
GaussianParams gaussian_from_raw(std::span<const double> raw, Point2 prev, const ModelConfig& cfg);

class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t seed);
  // Rebuilds from stored tensors; names and shapes must match the layout.
  Model(const ModelConfig& cfg, std::vector<Parameter> params, FeatureStats stats);

  const ModelConfig& config() const { return cfg_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;
  Gradients zero_gradients() const;

  const FeatureStats& feature_stats() const { return stats_; }
  void set_feature_stats(FeatureStats stats) { stats_ = std::move(stats); }

  // --- differentiable pieces; `obs` is standardised ---
  ad::Var encode(ad::Tape& tape, const Matrix& obs) const;
  ad::Var manoeuvre_logits(ad::Tape& tape, ad::Var memory) const;
  // Raw head rows (T x 5). prev[t] is the position token t carries
  // (prev[0] = origin), cond[t] the conditioning index, heads[t] the head.
  ad::Var decode_raw(ad::Tape& tape, ad::Var memory, std::span<const int> cond,
                     std::span<const int> heads, std::span<const Point2> prev) const;

  // --- plain evaluation ---
  Matrix encode(const Matrix& obs) const;
  ManoeuvrePrediction predict_manoeuvres(const Matrix& memory) const;
  // Conditioned on ground truth: labels drive both the conditioning code
  // and the head. For the mode-conditioned variant pass `mode`.
  std::vector<GaussianParams> decode_teacher_forced(const Matrix& memory,
                                                    std::span<const ManoeuvreType> labels,
                                                    std::span<const Point2> truth,
                                                    int mode = 0) const;
  // Autoregressive rollout feeding back predicted means, one token at a
  // time with cached keys and values.
  std::vector<GaussianParams> rollout(const Matrix& memory, std::span<const int> cond,
                                      std::span<const int> heads) const;
  // Per-step conditioning codes and heads for one mode.
  void routing(const ModePrediction& mode, std::vector<int>* cond,
               std::vector<int>* heads) const;

  // N modes sorted by probability, descending (ties by mode index).
  std::vector<ModePrediction> infer(const Matrix& raw_obs) const;
  std::vector<ModePrediction> infer_standardized(const Matrix& obs) const;
  // Hardens and rolls out every mode, in generator order.
  std::vector<ModePrediction> decode_modes(const Matrix& memory,
                                           const ManoeuvrePrediction& mp) const;

 private:
  struct Linear {
    std::size_t w = 0;
    std::size_t b = 0;
  };
  struct Norm {
    std::size_t gain = 0;
    std::size_t bias = 0;
  };
  struct Attention {
    Linear q, k, v, o;
  };
  struct EncoderLayer {
    Attention self;
    Norm norm1;
    Linear ff1, ff2;
    Norm norm2;
  };
  struct DecoderLayer {
    Attention self;
    Norm norm1;
    Attention cross;
    Norm norm2;
    Linear ff1, ff2;
    Norm norm3;
  };

  void build_layout();
  std::size_t add(const std::string& name, std::size_t rows, std::size_t cols);
  Linear add_linear(const std::string& name, std::size_t in, std::size_t out);
  Norm add_norm(const std::string& name, std::size_t dim);
  Attention add_attention(const std::string& name);
  void initialise(std::uint64_t seed);

  ad::Var param(ad::Tape& tape, std::size_t index) const;
  ad::Var linear(ad::Tape& tape, ad::Var x, const Linear& l) const;
  ad::Var norm(ad::Tape& tape, ad::Var x, const Norm& n) const;
  ad::Var attention(ad::Tape& tape, const Attention& a, ad::Var query_in, ad::Var kv_in,
                    bool causal) const;
  ad::Var feed_forward(ad::Tape& tape, ad::Var x, const Linear& ff1, const Linear& ff2) const;
  Matrix tokens(std::span<const int> cond, std::span<const Point2> prev) const;

  ModelConfig cfg_;
  std::vector<Parameter> params_;
  FeatureStats stats_;

  Linear enc_embed_;
  std::vector<EncoderLayer> enc_;
  Linear mlp1_, mlp2_;
  Linear dec_embed_;
  std::size_t start_token_ = 0;
  std::vector<DecoderLayer> dec_;
  std::vector<Linear> heads_;
};

}  // namespace mantra

#endif  // MANTRA_MODEL_HPP_
