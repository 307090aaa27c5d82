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

#include "mantra/kernels.hpp"

#include <array>
#include <random>
#include <vector>

#include "doctest.h"

namespace mantra::kernels {
namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.data()) v = n(rng);
  return m;
}

// Textbook triple loop in the same k order as the kernels.
Matrix naive(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  std::mt19937_64 rng(3);
  const std::vector<std::array<std::size_t, 3>> shapes = {
      {1, 1, 1}, {7, 5, 3}, {64, 64, 64}, {130, 33, 257}, {3, 200, 2}};
  for (const auto& [M, K, N] : shapes) {
    const Matrix a = random_matrix(rng, M, K);
    const Matrix b = random_matrix(rng, K, N);
    const Matrix bt = transpose(b);
    const Matrix at = transpose(a);
    const Matrix seed = random_matrix(rng, M, N);
    for (bool acc : {false, true}) {
      Matrix r1 = seed, p1 = seed, r2 = seed, p2 = seed, r3 = seed, p3 = seed;
      ref::gemm_nn(a, b, r1, acc);
      par::gemm_nn(a, b, p1, acc);
      ref::gemm_nt(a, bt, r2, acc);
      par::gemm_nt(a, bt, p2, acc);
      ref::gemm_tn(at, b, r3, acc);
      par::gemm_tn(at, b, p3, acc);
      CHECK(r1 == p1);
      CHECK(r2 == p2);
      CHECK(r3 == p3);
      for (std::size_t i = 0; i < r1.size(); ++i) {
        CHECK(r2[i] == doctest::Approx(r1[i]).epsilon(1e-12));
        CHECK(r3[i] == doctest::Approx(r1[i]).epsilon(1e-12));
      }
      if (!acc) CHECK(r1 == naive(a, b));
    }
  }
}

TEST_CASE("ordered sums do not depend on the thread split") {
  std::mt19937_64 rng(5);
  std::vector<Matrix> parts;
  for (int i = 0; i < 37; ++i) parts.push_back(random_matrix(rng, 1, 1000));
  std::vector<std::span<const double>> views;
  for (const Matrix& p : parts) views.push_back(p.data());
  std::vector<double> r(1000), q(1000), d(1000);
  ref::sum_ordered(views, r);
  par::sum_ordered(views, q);
  sum_ordered(views, d);
  CHECK(r == q);
  CHECK(r == d);
  double s = 0.0;
  for (const Matrix& p : parts) s += p[17];
  CHECK(r[17] == s);
}

TEST_CASE("dispatching matmul matches the reference") {
  std::mt19937_64 rng(8);
  const Matrix a = random_matrix(rng, 90, 40);
  const Matrix b = random_matrix(rng, 40, 70);
  Matrix r(90, 70);
  ref::gemm_nn(a, b, r, false);
  CHECK(matmul(a, b) == r);
  CHECK(matmul_nt(a, transpose(b)) == r);
  CHECK(max_threads() >= 1);
}

}  // namespace
}  // namespace mantra::kernels
