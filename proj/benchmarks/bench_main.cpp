// Microbenchmarks for the hot paths: banded kernel evaluation, restriction
// assembly, rho lookups, HKPV sampling, and the O(n^2) gap scan.

#include <benchmark/benchmark.h>

#include <complex>
#include <memory>

#include "fockdpp/analysis.hpp"
#include "fockdpp/cells.hpp"
#include "fockdpp/kernel.hpp"
#include "fockdpp/samplers.hpp"
#include "fockdpp/spectra.hpp"
#include "fockdpp/weights.hpp"

using namespace fockdpp;

namespace {

const TruncatedKernel& shared_kernel() {
  static const TruncatedKernel k = [] {
    const Weight w = Weight::power(1.5);
    auto rf = std::make_shared<const RadiusField>(w);
    return build_kernel_for_window(w, rf, 40.0, 1e-8, 2048);
  }();
  return k;
}

void bm_kernel_eval(benchmark::State& state) {
  const TruncatedKernel& k = shared_kernel();
  const cplx z(17.0, 3.0), zeta(16.4, 3.5);
  for (auto _ : state) benchmark::DoNotOptimize(k.eval_log(z, zeta));
}
BENCHMARK(bm_kernel_eval);

void bm_restriction_matrix(benchmark::State& state) {
  const TruncatedKernel& k = shared_kernel();
  const Cell cell = CellPartition::standard().cell(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(restriction_matrix(k, cell));
}
BENCHMARK(bm_restriction_matrix)->Arg(2)->Arg(8)->Arg(20);

void bm_restriction_spectrum(benchmark::State& state) {
  const TruncatedKernel& k = shared_kernel();
  const Cell cell = CellPartition::standard().cell(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(restriction_spectrum(k, cell));
}
BENCHMARK(bm_restriction_spectrum)->Arg(2)->Arg(8)->Arg(20);

void bm_rho(benchmark::State& state) {
  const RadiusField rf(Weight::power(1.5));
  double r = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rf.rho_radial(r));
    r = r < 1e3 ? r * 1.001 : 0.1;
  }
}
BENCHMARK(bm_rho);

void bm_sample_dpp(benchmark::State& state) {
  const Weight w = Weight::power(2.0);
  auto rf = std::make_shared<const RadiusField>(w);
  const TruncatedKernel k =
      build_kernel_with_rank(w, rf, static_cast<int>(state.range(0)), 14.0);
  const Window win = Window::disk(dpp_support_radius(k));
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sample_dpp(k, win, seed++));
}
BENCHMARK(bm_sample_dpp)->Arg(16)->Arg(64);

void bm_min_gap(benchmark::State& state) {
  const Weight w = Weight::power(2.0);
  auto rf = std::make_shared<const RadiusField>(w);
  const TruncatedKernel k = build_kernel_with_rank(w, rf, 128, 14.0);
  const PointConfiguration cfg =
      sample_dpp(k, Window::disk(dpp_support_radius(k)), 7);
  const bool dk = state.range(0) != 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(min_gap(
        cfg, dk ? GapMetric::KernelDK : GapMetric::Euclidean, dk ? &k : nullptr));
}
BENCHMARK(bm_min_gap)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
