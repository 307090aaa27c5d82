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

#include <cstddef>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mantra::kernels {
namespace {

// Below this many multiply-adds the thread fork costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 16;

void prepare(Matrix& c, std::size_t rows, std::size_t cols, bool accumulate) {
  if (accumulate) {
    if (c.rows() != rows || c.cols() != cols)
      throw std::invalid_argument("gemm: accumulator shape mismatch");
  } else if (c.rows() != rows || c.cols() != cols) {
    c = Matrix(rows, cols);
  } else {
    c.fill(0.0);
  }
}

inline void row_nn(const Matrix& a, const Matrix& b, Matrix& c,
                   std::size_t i) {
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  double* out = c.row(i).data();
  const double* arow = a.row(i).data();
  for (std::size_t k = 0; k < inner; ++k) {
    const double s = arow[k];
    const double* brow = b.row(k).data();
    for (std::size_t j = 0; j < n; ++j) out[j] += s * brow[j];
  }
}

inline void row_nt(const Matrix& a, const Matrix& b, Matrix& c,
                   std::size_t i) {
  const std::size_t inner = a.cols();
  const double* arow = a.row(i).data();
  double* out = c.row(i).data();
  for (std::size_t j = 0; j < b.rows(); ++j) {
    const double* brow = b.row(j).data();
    double acc = 0.0;
    for (std::size_t k = 0; k < inner; ++k) acc += arow[k] * brow[k];
    out[j] += acc;
  }
}

inline void row_tn(const Matrix& a, const Matrix& b, Matrix& c,
                   std::size_t i) {
  double* out = c.row(i).data();
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double s = a(k, i);
    const double* brow = b.row(k).data();
    for (std::size_t j = 0; j < n; ++j) out[j] += s * brow[j];
  }
}

void check_nn(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("gemm_nn: shape");
}
void check_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("gemm_nt: shape");
}
void check_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("gemm_tn: shape");
}

bool use_parallel(std::size_t work) {
#ifdef _OPENMP
  return work >= kParallelWork && !omp_in_parallel() &&
         omp_get_max_threads() > 1;
#else
  (void)work;
  return false;
#endif
}

}  // namespace

namespace ref {

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check_nn(a, b);
  prepare(c, a.rows(), b.cols(), accumulate);
  for (std::size_t i = 0; i < a.rows(); ++i) row_nn(a, b, c, i);
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check_nt(a, b);
  prepare(c, a.rows(), b.rows(), accumulate);
  for (std::size_t i = 0; i < a.rows(); ++i) row_nt(a, b, c, i);
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check_tn(a, b);
  prepare(c, a.cols(), b.cols(), accumulate);
  for (std::size_t i = 0; i < a.cols(); ++i) row_tn(a, b, c, i);
}

void sum_ordered(std::span<const std::span<const double>> parts,
                 std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    for (const auto& p : parts) acc += p[i];
    out[i] = acc;
  }
}

}  // namespace ref

namespace par {

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check_nn(a, b);
  prepare(c, a.rows(), b.cols(), accumulate);
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    row_nn(a, b, c, static_cast<std::size_t>(i));
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check_nt(a, b);
  prepare(c, a.rows(), b.rows(), accumulate);
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    row_nt(a, b, c, static_cast<std::size_t>(i));
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check_tn(a, b);
  prepare(c, a.cols(), b.cols(), accumulate);
  const auto rows = static_cast<std::ptrdiff_t>(a.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    row_tn(a, b, c, static_cast<std::size_t>(i));
}

void sum_ordered(std::span<const std::span<const double>> parts,
                 std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (const auto& p : parts) acc += p[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = acc;
  }
}

}  // namespace par

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (use_parallel(a.rows() * a.cols() * b.cols()))
    par::gemm_nn(a, b, c, accumulate);
  else
    ref::gemm_nn(a, b, c, accumulate);
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (use_parallel(a.rows() * a.cols() * b.rows()))
    par::gemm_nt(a, b, c, accumulate);
  else
    ref::gemm_nt(a, b, c, accumulate);
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (use_parallel(a.rows() * a.cols() * b.cols()))
    par::gemm_tn(a, b, c, accumulate);
  else
    ref::gemm_tn(a, b, c, accumulate);
}

void sum_ordered(std::span<const std::span<const double>> parts,
                 std::span<double> out) {
  if (use_parallel(parts.size() * out.size()))
    par::sum_ordered(parts, out);
  else
    ref::sum_ordered(parts, out);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c;
  gemm_nn(a, b, c, false);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  Matrix c;
  gemm_nt(a, b, c, false);
  return c;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace mantra::kernels
