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

#ifndef MANTRA_GAUSSIAN_HPP_
#define MANTRA_GAUSSIAN_HPP_

#include <span>

#include "mantra/geometry.hpp"

namespace mantra {

// Bivariate normal over (lon, lat), in metres.
struct GaussianParams {
  double mu_lon = 0.0;
  double mu_lat = 0.0;
  double sigma_lon = 1.0;
  double sigma_lat = 1.0;
  double rho = 0.0;

  Point2 mean() const { return {mu_lon, mu_lat}; }
  bool valid() const;
};

inline constexpr double kSigmaMin = 1e-3;
inline constexpr double kSigmaMax = 1e3;
inline constexpr double kRhoLimit = 0.999;

// -log density, evaluated in log space. Throws NumericalError on non-finite
// input or invalid parameters.
double bvn_nll(const GaussianParams& g, Point2 point);

// Partial derivatives of bvn_nll with respect to (mu_lon, mu_lat, sigma_lon,
// sigma_lat, rho).
struct BvnGradient {
  double mu_lon, mu_lat, sigma_lon, sigma_lat, rho;
};
BvnGradient bvn_nll_gradient(const GaussianParams& g, Point2 point);

// Density (not log); used by quadrature checks.
double bvn_density(const GaussianParams& g, Point2 point);

// Sum over steps of bvn_nll. Throws std::invalid_argument on length mismatch.
double traj_loss(std::span<const GaussianParams> steps, std::span<const Point2> truth);

}  // namespace mantra

#endif  // MANTRA_GAUSSIAN_HPP_
