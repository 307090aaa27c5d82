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

#include "mantra/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mantra/errors.hpp"

namespace mantra {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check(const GaussianParams& g, Point2 p) {
  if (!std::isfinite(p.lon) || !std::isfinite(p.lat))
    throw NumericalError("bvn_nll: non-finite point");
  if (!g.valid()) throw NumericalError("bvn_nll: invalid Gaussian parameters");
}

}  // namespace

bool GaussianParams::valid() const {
  return std::isfinite(mu_lon) && std::isfinite(mu_lat) && std::isfinite(sigma_lon) &&
         std::isfinite(sigma_lat) && std::isfinite(rho) && sigma_lon > 0.0 &&
         sigma_lat > 0.0 && std::abs(rho) < 1.0;
}

double bvn_nll(const GaussianParams& g, Point2 p) {
  check(g, p);
  const double dx = (p.lon - g.mu_lon) / g.sigma_lon;
  const double dy = (p.lat - g.mu_lat) / g.sigma_lat;
  const double q = 1.0 - g.rho * g.rho;
  const double z = dx * dx - 2.0 * g.rho * dx * dy + dy * dy;
  return kLog2Pi + std::log(g.sigma_lon) + std::log(g.sigma_lat) + 0.5 * std::log(q) +
         z / (2.0 * q);
}

BvnGradient bvn_nll_gradient(const GaussianParams& g, Point2 p) {
  check(g, p);
  const double dx = (p.lon - g.mu_lon) / g.sigma_lon;
  const double dy = (p.lat - g.mu_lat) / g.sigma_lat;
  const double r = g.rho;
  const double q = 1.0 - r * r;
  const double z = dx * dx - 2.0 * r * dx * dy + dy * dy;
  BvnGradient d;
  d.mu_lon = -(dx - r * dy) / (q * g.sigma_lon);
  d.mu_lat = -(dy - r * dx) / (q * g.sigma_lat);
  d.sigma_lon = (1.0 - (dx * dx - r * dx * dy) / q) / g.sigma_lon;
  d.sigma_lat = (1.0 - (dy * dy - r * dx * dy) / q) / g.sigma_lat;
  d.rho = -r / q - dx * dy / q + r * z / (q * q);
  return d;
}

double bvn_density(const GaussianParams& g, Point2 p) { return std::exp(-bvn_nll(g, p)); }

double traj_loss(std::span<const GaussianParams> steps, std::span<const Point2> truth) {
  if (steps.size() != truth.size())
    throw std::invalid_argument("traj_loss: prediction and ground truth lengths differ");
  double total = 0.0;
  for (std::size_t t = 0; t < steps.size(); ++t) total += bvn_nll(steps[t], truth[t]);
  return total;
}

}  // namespace mantra
