// Matrix-free Liouvillian stencil (OpenMP) against the serial sparse reference.
#include <benchmark/benchmark.h>

#include <omp.h>

#include "btc/dynamics.hpp"
#include "btc/liouvillian.hpp"

namespace {

btc::ModelParams params_for(int n) {
  btc::ModelParams p;
  p.n_spins = n;
  p.omega0 = 1.5;
  p.omega_z = 0.3;
  p.omega_x = 0.1;
  return p;
}

btc::CVector input_for(const btc::ModelParams& p) {
  return btc::spin::coherent_spin_state(p.sector(), 1.1, 0.4).vec();
}

void BM_StencilParallel(benchmark::State& state) {
  const auto p = params_for(static_cast<int>(state.range(0)));
  const btc::lindblad::LiouvillianStencil stencil(p);
  const btc::CVector x = input_for(p);
  btc::CVector y(x.size());
  for (auto _ : state) {
    stencil.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.counters["threads"] = omp_get_max_threads();
  state.SetItemsProcessed(state.iterations() * x.size());
}

void BM_StencilOneThread(benchmark::State& state) {
  const auto p = params_for(static_cast<int>(state.range(0)));
  const btc::lindblad::LiouvillianStencil stencil(p);
  const btc::CVector x = input_for(p);
  btc::CVector y(x.size());
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  for (auto _ : state) {
    stencil.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  omp_set_num_threads(saved);
  state.SetItemsProcessed(state.iterations() * x.size());
}

void BM_SparseReference(benchmark::State& state) {
  const auto p = params_for(static_cast<int>(state.range(0)));
  const btc::CVector x = input_for(p);
  for (auto _ : state) {
    btc::CVector y = btc::lindblad::apply_reference(p, x);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * x.size());
}

void BM_SuperoperatorProduct(benchmark::State& state) {
  const auto p = params_for(static_cast<int>(state.range(0)));
  const auto l = btc::lindblad::build_superoperator(p);
  const btc::CVector x = input_for(p);
  btc::CVector y(x.size());
  for (auto _ : state) {
    y.noalias() = l.matrix * x;
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * x.size());
}

}  // namespace

BENCHMARK(BM_StencilParallel)->Arg(50)->Arg(100)->Arg(200)->Arg(400);
BENCHMARK(BM_StencilOneThread)->Arg(50)->Arg(100)->Arg(200)->Arg(400);
BENCHMARK(BM_SparseReference)->Arg(50)->Arg(100)->Arg(200)->Arg(400);
BENCHMARK(BM_SuperoperatorProduct)->Arg(50)->Arg(100)->Arg(200)->Arg(400);

BENCHMARK_MAIN();
