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

// Minimal reverse-mode automatic differentiation over dense matrices.
//
// A Tape records every operation of one forward pass. Parameters enter the
// tape by reference (no copy) and carry the index of their slot in the
// owning parameter list, so gradients can be scattered back after
// `backward`. A tape constructed with `record = false` evaluates values
// only and keeps no closures.

#ifndef MANTRA_AUTODIFF_HPP_
#define MANTRA_AUTODIFF_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mantra/matrix.hpp"

namespace mantra::ad {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class Tape {
 public:
  // Receives the gradient of the op's output.
  using Backward = std::function<void(Tape&, const Matrix&)>;

  explicit Tape(bool record = true) : record_(record) { nodes_.reserve(512); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // `value` must outlive the tape.
  Var parameter(std::size_t index, const Matrix& value);

  // Appends an op result. `back` runs during backward and accumulates into
  // grad(input) for the inputs that need it.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward back);
  Var record(Matrix value, std::span<const Var> inputs, Backward back);

  const Matrix& value(Var v) const;
  // Gradient buffer of v, zero-initialised on first access.
  Matrix& grad(Var v);
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 and propagates. root must be 1 x 1.
  void backward(Var root);

  // Calls f(parameter_index, gradient) for each parameter that received a
  // gradient, in tape order.
  void for_each_parameter_grad(
      const std::function<void(std::size_t, const Matrix&)>& f) const;

  // Hash of every non-differentiable branch taken during the forward pass
  // (ReLU signs, clamps, argmins). Finite-difference checks compare it
  // across perturbed evaluations to detect kink crossings.
  void note_branch(std::uint64_t bits);
  std::uint64_t branch_signature() const { return branch_hash_; }

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    Backward back;
    std::ptrdiff_t param = -1;
    bool needs_grad = false;
  };

  bool record_;
  std::vector<Node> nodes_;
  std::uint64_t branch_hash_ = 1469598103934665603ull;
};

inline const Matrix& Var::value() const { return tape->value(*this); }

// Differentiable operations.
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
Var add(Var a, Var b);
Var add_row(Var x, Var bias);  // bias is 1 x cols, broadcast over rows
Var add_to_row(Var x, std::size_t r, Var v);  // v is 1 x cols
Var add_constant(Var x, const Matrix& c);
Var scale(Var x, double s);
Var relu(Var x);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
// Row-wise softmax. With `causal`, entry (i, j) for j > i is masked out.
Var softmax_rows(Var x, bool causal);
Var slice_cols(Var x, std::size_t first, std::size_t count);
Var concat_cols(std::span<const Var> parts);
Var row(Var x, std::size_t r);
// Output row t is row t of sources[index[t]].
Var route_rows(std::span<const Var> sources, std::span<const int> index);
Var sum_all(Var x);

}  // namespace mantra::ad

#endif  // MANTRA_AUTODIFF_HPP_
