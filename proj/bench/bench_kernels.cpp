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

// Serial reference against OpenMP kernels, plus one training step.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mantra/kernels.hpp"
#include "mantra/training.hpp"

namespace mantra {
namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = n(rng);
  return m;
}

template <void (*Gemm)(const Matrix&, const Matrix&, Matrix&, bool)>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  Matrix c(n, n);
  for (auto _ : state) {
    Gemm(a, b, c, false);
    benchmark::DoNotOptimize(c.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <void (*Sum)(std::span<const std::span<const double>>, std::span<double>)>
void BM_SumOrdered(benchmark::State& state) {
  const auto parts = static_cast<std::size_t>(state.range(0));
  const std::size_t len = 50000;  // about a desk model's parameter count
  std::vector<std::vector<double>> store(parts, std::vector<double>(len, 1.0));
  std::vector<std::span<const double>> views(store.begin(), store.end());
  std::vector<double> out(len);
  for (auto _ : state) {
    Sum(views, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_TrainStep(benchmark::State& state) {
  ModelConfig cfg;  // desk model
  Model model(cfg, 3);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  TrainingExample ex;
  ex.obs = Matrix(static_cast<std::size_t>(cfg.t_obs), static_cast<std::size_t>(cfg.n_features));
  for (double& v : ex.obs.data()) v = 0.5 * n(rng);
  Point2 p{0.0, 0.0};
  for (int t = 0; t < cfg.t_pred; ++t) {
    p.lon += 5.0;
    ex.future.push_back(p);
    ex.labels.push_back(ManoeuvreType::kLaneKeep);
  }
  ex.manoeuvre = encode_manoeuvre_vector(ex.labels, cfg.horizon());
  Gradients g = model.zero_gradients();
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_loss(model, ex, ModeSelection::kMMP, &g, nullptr).total);
  }
}

BENCHMARK(BM_Gemm<kernels::ref::gemm_nn>)->Name("gemm_nn/ref")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Gemm<kernels::par::gemm_nn>)->Name("gemm_nn/par")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Gemm<kernels::ref::gemm_tn>)->Name("gemm_tn/ref")->Arg(128);
BENCHMARK(BM_Gemm<kernels::par::gemm_tn>)->Name("gemm_tn/par")->Arg(128);
BENCHMARK(BM_SumOrdered<kernels::ref::sum_ordered>)->Name("sum_ordered/ref")->Arg(8)->Arg(32);
BENCHMARK(BM_SumOrdered<kernels::par::sum_ordered>)->Name("sum_ordered/par")->Arg(8)->Arg(32);
BENCHMARK(BM_TrainStep)->Name("sample_loss_backward/desk");

}  // namespace
}  // namespace mantra

BENCHMARK_MAIN();
