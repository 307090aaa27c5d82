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

// Dense kernels used by the network and the trainer.
//
// Every kernel exists twice: a serial reference in `ref` and an OpenMP
// version in `par`. Both accumulate each output element in the same order,
// so their results are bit-identical; tests compare them directly. The
// unqualified entry points dispatch to `par` when the problem is large
// enough and we are not already inside a parallel region.

#ifndef MANTRA_KERNELS_HPP_
#define MANTRA_KERNELS_HPP_

#include <span>

#include "mantra/matrix.hpp"

namespace mantra::kernels {

namespace ref {
// c (+)= a * b
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);
// c (+)= a * b^T
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);
// c (+)= a^T * b
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);
// out[i] = sum_k parts[k][i], summed in k order.
void sum_ordered(std::span<const std::span<const double>> parts,
                 std::span<double> out);
}  // namespace ref

namespace par {
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);
void sum_ordered(std::span<const std::span<const double>> parts,
                 std::span<double> out);
}  // namespace par

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);
void sum_ordered(std::span<const std::span<const double>> parts,
                 std::span<double> out);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Number of threads the dispatching kernels may use.
int max_threads();

}  // namespace mantra::kernels

#endif  // MANTRA_KERNELS_HPP_
