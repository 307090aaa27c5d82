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

#include "mantra/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "mantra/kernels.hpp"

namespace mantra::ad {

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::parameter(std::size_t index, const Matrix& value) {
  Node n;
  n.external = &value;
  n.param = static_cast<std::ptrdiff_t>(index);
  n.needs_grad = record_;
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs,
                 Backward back) {
  return record(std::move(value),
                std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(back));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, Backward back) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& in : inputs) {
      if (nodes_[in.id].needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
    if (n.needs_grad) n.back = std::move(back);
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Matrix& Tape::value(Var v) const {
  const Node& n = nodes_[v.id];
  return n.external ? *n.external : n.value;
}

Matrix& Tape::grad(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.empty()) {
    const Matrix& val = n.external ? *n.external : n.value;
    n.grad = Matrix(val.rows(), val.cols());
  }
  return n.grad;
}

void Tape::backward(Var root) {
  if (!record_) throw std::logic_error("backward on a non-recording tape");
  const Matrix& r = value(root);
  if (r.rows() != 1 || r.cols() != 1)
    throw std::invalid_argument("backward root must be a scalar");
  grad(root)(0, 0) = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.back || n.grad.empty()) continue;
    n.back(*this, n.grad);
  }
}

void Tape::for_each_parameter_grad(
    const std::function<void(std::size_t, const Matrix&)>& f) const {
  for (const Node& n : nodes_) {
    if (n.param >= 0 && !n.grad.empty())
      f(static_cast<std::size_t>(n.param), n.grad);
  }
}

void Tape::note_branch(std::uint64_t bits) {
  branch_hash_ ^= bits + 0x9e3779b97f4a7c15ull + (branch_hash_ << 6) +
                  (branch_hash_ >> 2);
}

namespace {

Tape& tape_of(Var v) {
  if (v.tape == nullptr) throw std::logic_error("unbound Var");
  return *v.tape;
}

void same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw std::logic_error("Vars from different tapes");
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b);
  Tape& t = tape_of(a);
  return t.record(kernels::matmul(a.value(), b.value()), {a, b},
                  [a, b](Tape& tp, const Matrix& g) {
                    if (tp.needs_grad(a))
                      kernels::gemm_nt(g, b.value(), tp.grad(a), true);
                    if (tp.needs_grad(b))
                      kernels::gemm_tn(a.value(), g, tp.grad(b), true);
                  });
}

Var matmul_nt(Var a, Var b) {
  same_tape(a, b);
  Tape& t = tape_of(a);
  return t.record(kernels::matmul_nt(a.value(), b.value()), {a, b},
                  [a, b](Tape& tp, const Matrix& g) {
                    if (tp.needs_grad(a))
                      kernels::gemm_nn(g, b.value(), tp.grad(a), true);
                    if (tp.needs_grad(b))
                      kernels::gemm_tn(g, a.value(), tp.grad(b), true);
                  });
}

Var add(Var a, Var b) {
  same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) throw std::invalid_argument("add: shape mismatch");
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return tape_of(a).record(std::move(out), {a, b},
                           [a, b](Tape& tp, const Matrix& g) {
                             for (Var v : {a, b}) {
                               if (!tp.needs_grad(v)) continue;
                               Matrix& d = tp.grad(v);
                               for (std::size_t i = 0; i < g.size(); ++i)
                                 d[i] += g[i];
                             }
                           });
}

Var add_row(Var x, Var bias) {
  same_tape(x, bias);
  const Matrix& xv = x.value();
  const Matrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols())
    throw std::invalid_argument("add_row: bias shape");
  Matrix out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv(0, c);
  return tape_of(x).record(std::move(out), {x, bias},
                           [x, bias](Tape& tp, const Matrix& g) {
                             if (tp.needs_grad(x)) {
                               Matrix& d = tp.grad(x);
                               for (std::size_t i = 0; i < g.size(); ++i)
                                 d[i] += g[i];
                             }
                             if (tp.needs_grad(bias)) {
                               Matrix& d = tp.grad(bias);
                               for (std::size_t r = 0; r < g.rows(); ++r)
                                 for (std::size_t c = 0; c < g.cols(); ++c)
                                   d(0, c) += g(r, c);
                             }
                           });
}

Var add_to_row(Var x, std::size_t r, Var v) {
  same_tape(x, v);
  const Matrix& xv = x.value();
  const Matrix& vv = v.value();
  if (vv.rows() != 1 || vv.cols() != xv.cols() || r >= xv.rows())
    throw std::invalid_argument("add_to_row: shape");
  Matrix out = xv;
  for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += vv(0, c);
  return tape_of(x).record(std::move(out), {x, v},
                           [x, r, v](Tape& tp, const Matrix& g) {
                             if (tp.needs_grad(x)) {
                               Matrix& d = tp.grad(x);
                               for (std::size_t i = 0; i < g.size(); ++i)
                                 d[i] += g[i];
                             }
                             if (tp.needs_grad(v)) {
                               Matrix& d = tp.grad(v);
                               for (std::size_t c = 0; c < g.cols(); ++c)
                                 d(0, c) += g(r, c);
                             }
                           });
}

Var add_constant(Var x, const Matrix& c) {
  const Matrix& xv = x.value();
  if (!xv.same_shape(c)) throw std::invalid_argument("add_constant: shape");
  Matrix out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
  return tape_of(x).record(std::move(out), {x}, [x](Tape& tp, const Matrix& g) {
    Matrix& d = tp.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
  });
}

Var scale(Var x, double s) {
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  return tape_of(x).record(std::move(out), {x},
                           [x, s](Tape& tp, const Matrix& g) {
                             Matrix& d = tp.grad(x);
                             for (std::size_t i = 0; i < g.size(); ++i)
                               d[i] += s * g[i];
                           });
}

Var relu(Var x) {
  Tape& t = tape_of(x);
  Matrix out = x.value();
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool on = out[i] > 0.0;
    if (!on) out[i] = 0.0;
    bits = (bits << 1 | (bits >> 63)) ^ static_cast<std::uint64_t>(on);
  }
  t.note_branch(bits);
  return t.record(std::move(out), {x}, [x](Tape& tp, const Matrix& g) {
    const Matrix& xv = x.value();
    Matrix& d = tp.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xv[i] > 0.0) d[i] += g[i];
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  same_tape(x, gain);
  same_tape(x, bias);
  const Matrix& xv = x.value();
  const Matrix& gv = gain.value();
  const Matrix& bv = bias.value();
  const std::size_t rows = xv.rows();
  const std::size_t cols = xv.cols();
  if (gv.rows() != 1 || gv.cols() != cols || !gv.same_shape(bv))
    throw std::invalid_argument("layer_norm: parameter shape");
  Matrix normed(rows, cols);
  std::vector<double> inv_std(rows);
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mean += xv(r, c);
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = xv(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      normed(r, c) = (xv(r, c) - mean) * inv_std[r];
      out(r, c) = normed(r, c) * gv(0, c) + bv(0, c);
    }
  }
  return tape_of(x).record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, normed = std::move(normed),
       inv_std = std::move(inv_std)](Tape& tp, const Matrix& g) {
        const std::size_t rows = g.rows();
        const std::size_t cols = g.cols();
        const Matrix& gv = gain.value();
        if (tp.needs_grad(gain)) {
          Matrix& d = tp.grad(gain);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
              d(0, c) += g(r, c) * normed(r, c);
        }
        if (tp.needs_grad(bias)) {
          Matrix& d = tp.grad(bias);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) d(0, c) += g(r, c);
        }
        if (tp.needs_grad(x)) {
          Matrix& d = tp.grad(x);
          const double n = static_cast<double>(cols);
          for (std::size_t r = 0; r < rows; ++r) {
            double mean_dn = 0.0;
            double mean_dn_n = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
              const double dn = g(r, c) * gv(0, c);
              mean_dn += dn;
              mean_dn_n += dn * normed(r, c);
            }
            mean_dn /= n;
            mean_dn_n /= n;
            for (std::size_t c = 0; c < cols; ++c) {
              const double dn = g(r, c) * gv(0, c);
              d(r, c) +=
                  inv_std[r] * (dn - mean_dn - normed(r, c) * mean_dn_n);
            }
          }
        }
      });
}

Var softmax_rows(Var x, bool causal) {
  const Matrix& xv = x.value();
  Matrix out(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const std::size_t limit = causal ? std::min(r + 1, xv.cols()) : xv.cols();
    double mx = xv(r, 0);
    for (std::size_t c = 1; c < limit; ++c) mx = std::max(mx, xv(r, c));
    double total = 0.0;
    for (std::size_t c = 0; c < limit; ++c) {
      out(r, c) = std::exp(xv(r, c) - mx);
      total += out(r, c);
    }
    for (std::size_t c = 0; c < limit; ++c) out(r, c) /= total;
  }
  Tape& t = tape_of(x);
  const std::uint32_t self = static_cast<std::uint32_t>(t.size());
  return t.record(std::move(out), {x}, [x, self](Tape& tp, const Matrix& g) {
    const Matrix& y = tp.value(Var{&tp, self});
    Matrix& d = tp.grad(x);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c)
        d(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Var slice_cols(Var x, std::size_t first, std::size_t count) {
  const Matrix& xv = x.value();
  if (first + count > xv.cols()) throw std::invalid_argument("slice_cols");
  Matrix out(xv.rows(), count);
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = xv(r, first + c);
  return tape_of(x).record(std::move(out), {x},
                           [x, first](Tape& tp, const Matrix& g) {
                             Matrix& d = tp.grad(x);
                             for (std::size_t r = 0; r < g.rows(); ++r)
                               for (std::size_t c = 0; c < g.cols(); ++c)
                                 d(r, first + c) += g(r, c);
                           });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: rows");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Matrix& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) out(r, offset + c) = pv(r, c);
    offset += pv.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape_of(parts[0]).record(
      std::move(out), parts, [inputs](Tape& tp, const Matrix& g) {
        std::size_t offset = 0;
        for (const Var& p : inputs) {
          const std::size_t pc = p.cols();
          if (tp.needs_grad(p)) {
            Matrix& d = tp.grad(p);
            for (std::size_t r = 0; r < g.rows(); ++r)
              for (std::size_t c = 0; c < pc; ++c) d(r, c) += g(r, offset + c);
          }
          offset += pc;
        }
      });
}

Var row(Var x, std::size_t r) {
  const Matrix& xv = x.value();
  if (r >= xv.rows()) throw std::invalid_argument("row: index");
  Matrix out(1, xv.cols());
  for (std::size_t c = 0; c < xv.cols(); ++c) out(0, c) = xv(r, c);
  return tape_of(x).record(std::move(out), {x},
                           [x, r](Tape& tp, const Matrix& g) {
                             Matrix& d = tp.grad(x);
                             for (std::size_t c = 0; c < g.cols(); ++c)
                               d(r, c) += g(0, c);
                           });
}

Var route_rows(std::span<const Var> sources, std::span<const int> index) {
  if (sources.empty()) throw std::invalid_argument("route_rows: no sources");
  const std::size_t rows = sources[0].rows();
  const std::size_t cols = sources[0].cols();
  if (index.size() != rows) throw std::invalid_argument("route_rows: index");
  for (const Var& s : sources)
    if (s.rows() != rows || s.cols() != cols)
      throw std::invalid_argument("route_rows: source shape");
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const int k = index[r];
    if (k < 0 || static_cast<std::size_t>(k) >= sources.size())
      throw std::invalid_argument("route_rows: source index");
    const Matrix& sv = sources[static_cast<std::size_t>(k)].value();
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = sv(r, c);
  }
  std::vector<Var> inputs(sources.begin(), sources.end());
  std::vector<int> idx(index.begin(), index.end());
  return tape_of(sources[0]).record(
      std::move(out), sources, [inputs, idx](Tape& tp, const Matrix& g) {
        for (std::size_t r = 0; r < g.rows(); ++r) {
          const Var src = inputs[static_cast<std::size_t>(idx[r])];
          if (!tp.needs_grad(src)) continue;
          Matrix& d = tp.grad(src);
          for (std::size_t c = 0; c < g.cols(); ++c) d(r, c) += g(r, c);
        }
      });
}

Var sum_all(Var x) {
  const Matrix& xv = x.value();
  Matrix out(1, 1);
  for (std::size_t i = 0; i < xv.size(); ++i) out[0] += xv[i];
  return tape_of(x).record(std::move(out), {x}, [x](Tape& tp, const Matrix& g) {
    Matrix& d = tp.grad(x);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[0];
  });
}

}  // namespace mantra::ad
