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

// Central finite-difference check of sample_loss gradients.

#ifndef MANTRA_TESTS_GRADCHECK_HPP_
#define MANTRA_TESTS_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "mantra/model.hpp"
#include "mantra/training.hpp"

namespace mantra::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t retried = 0;  // kink crossed at h, rechecked at a smaller step
  std::size_t skipped = 0;  // kink crossed at both steps
  std::string worst;        // parameter name of the worst entry
};

// `floor` keeps entries whose true value is zero from being judged on
// rounding noise alone.
inline double rel_error(double a, double n, double floor = 1e-6) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

// Compares every parameter entry. A perturbation that flips a ReLU, clamp
// or winner (seen through the tape's branch signature) is not a valid FD
// sample; such entries are retried at 1e-6 and skipped if still crossing.
inline GradCheckResult check_gradients(Model& model, const TrainingExample& ex,
                                       ModeSelection sel, double h = 1e-4) {
  Gradients analytic = model.zero_gradients();
  std::uint64_t base_sig = 0;
  const double loss = sample_loss(model, ex, sel, &analytic, &base_sig).total;
  // Central differences lose about |L| * eps / h to cancellation, so entries
  // far below the loss scale are compared against a floor of 1e-6 |L|.
  const double floor = 1e-6 * std::max(1.0, std::abs(loss));
  GradCheckResult r;
  auto probe = [&](double& w, double step, double* out) {
    const double keep = w;
    std::uint64_t s1 = 0, s2 = 0;
    w = keep + step;
    const double fp = sample_loss(model, ex, sel, nullptr, &s1).total;
    w = keep - step;
    const double fm = sample_loss(model, ex, sel, nullptr, &s2).total;
    w = keep;
    *out = (fp - fm) / (2.0 * step);
    return s1 == base_sig && s2 == base_sig;
  };
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    Parameter& p = model.parameters()[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      double numeric = 0.0;
      if (!probe(p.value[j], h, &numeric)) {
        ++r.retried;
        if (!probe(p.value[j], 1e-6, &numeric)) {
          ++r.skipped;
          continue;
        }
      }
      ++r.checked;
      const double e = rel_error(analytic[i][j], numeric, floor);
      if (e > r.max_rel_error) {
        r.max_rel_error = e;
        r.worst = p.name + "[" + std::to_string(j) + "]";
      }
    }
  }
  return r;
}

}  // namespace mantra::testing

#endif  // MANTRA_TESTS_GRADCHECK_HPP_
