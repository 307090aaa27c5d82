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

// Loss stack, mode selection and the training loop.
//
// The total loss for one sample is
//   L = L_traj + L_p + L_U + L_V
// where L_traj is the teacher-forced trajectory NLL, L_p = -log p of the
// winning mode, L_U the winner's manoeuvre-type NLL and L_V the masked l2
// error of its transition times. Mode indices are 0-based.

#ifndef MANTRA_TRAINING_HPP_
#define MANTRA_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "mantra/autodiff.hpp"
#include "mantra/dataset.hpp"
#include "mantra/model.hpp"

namespace mantra {

inline constexpr double kLogClamp = 1e-12;

enum class ModeSelection { kMMP, kMTP };
std::string_view mode_selection_name(ModeSelection s);  // "MMP" / "MTP"
ModeSelection mode_selection_from_name(std::string_view s);

struct LossBreakdown {
  double traj = 0.0;
  double p = 0.0;
  double u = 0.0;
  double v = 0.0;
  double total = 0.0;
  int winner = 0;
};

// -sum_c log q_{n,c}(gt_U[c]), each log clamped at kLogClamp.
double manoeuvre_type_nll(const ManoeuvrePrediction& pred, int n,
                          std::span<const ManoeuvreType> gt_types);
int select_mode_mmp(const ManoeuvrePrediction& pred, std::span<const ManoeuvreType> gt_types);
// L1 distance of final points; ties to the lowest index.
int select_mode_mtp(std::span<const Point2> mode_endpoints, Point2 gt_endpoint);
// l2 norm over entries where gt_v != -1; 0 when fully masked.
double transition_time_loss(std::span<const double> pred_v, std::span<const double> gt_v);

// Fused differentiable pieces. `raw` is T x 5 head output.
ad::Var traj_nll(ad::Var raw, std::span<const Point2> prev, std::span<const Point2> truth,
                 const ModelConfig& cfg);
// `logits` is the 1 x manoeuvre_outputs generator output. Writes the three
// terms to `terms` (p, u, v) when non-null.
ad::Var manoeuvre_loss(ad::Var logits, int modes, int periods, int winner,
                       const ManoeuvreVector& gt, double terms[3]);

// A training target with standardised observation.
struct TrainingExample {
  Matrix obs;
  std::vector<Point2> future;
  LabelSequence labels;
  ManoeuvreVector manoeuvre;
};
TrainingExample make_example(const DatasetSample& s, const Model& model);

// Forward pass and, when `grads` is non-null, backward pass accumulating
// into `grads`. Throws NumericalError on a non-finite loss.
LossBreakdown sample_loss(const Model& model, const TrainingExample& ex, ModeSelection sel,
                          Gradients* grads, std::uint64_t* branch_signature = nullptr);

struct TrainConfig {
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 1e-3;
  int warmup_epochs = 10;
  std::uint64_t seed = 0;
  ModeSelection selection = ModeSelection::kMMP;
  double grad_clip = 0.0;  // global norm; 0 disables
  bool fit_feature_stats = true;

  void validate() const;  // throws ConfigError
};

struct EpochLog {
  int epoch = 0;  // 1-based
  LossBreakdown mean;
  double wall_time_s = 0.0;
};

class Adam {
 public:
  Adam(const std::vector<Parameter>& params, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void step(std::vector<Parameter>& params, const Gradients& grads, double lr);

 private:
  double beta1_, beta2_, eps_;
  long t_ = 0;
  Gradients m_, v_;
};

// Learning rate at optimiser step `step` (0-based) with linear warmup over
// `warmup_steps` steps.
double warmup_lr(double base, long step, long warmup_steps);

using EpochCallback = std::function<void(const EpochLog&)>;

std::vector<EpochLog> fit(Model& model, std::span<const DatasetSample> train,
                          const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Header: epoch,L_total,L_traj,L_p,L_U,L_V,wall_time_s
void write_loss_csv(std::ostream& out, std::span<const EpochLog> log);

}  // namespace mantra

#endif  // MANTRA_TRAINING_HPP_
