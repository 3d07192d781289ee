// Serial reference vs OpenMP kernel on the same inputs. Run with OMP_NUM_THREADS to vary the team.
#include <benchmark/benchmark.h>

#include <vector>

#include "sqz/bench.hpp"
#include "sqz/kernels.hpp"
#include "sqz/measurement.hpp"

namespace {

const sqz::BenchConfig& bench() {
  static const sqz::BenchConfig b = sqz::load_bench_config_file(SQZSIM_SOURCE_DIR "/configs/paper-bench.ini");
  return b;
}

template <bool Parallel>
void tuning(benchmark::State& state) {
  const auto& c = bench().opo_cavity.crystal;
  const sqz::OpticalFieldSpec pump(1064e-9, 0.0);
  std::vector<double> t(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 20.0 + 30.0 * static_cast<double>(i) / static_cast<double>(t.size());
  std::vector<double> out(t.size());
  for (auto _ : state) {
    if constexpr (Parallel) sqz::kernels::tuning_efficiency_parallel(c, pump, t, out);
    else sqz::kernels::tuning_efficiency_serial(c, pump, t, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void spectrum(benchmark::State& state) {
  const auto m = bench().noise_model();
  const auto f = sqz::log_spaced(1.0, 1e9, static_cast<std::size_t>(state.range(0)));
  std::vector<double> out(f.size());
  for (auto _ : state) {
    if constexpr (Parallel) sqz::kernels::detected_variance_parallel(m, f, 0.0, true, out);
    else sqz::kernels::detected_variance_serial(m, f, 0.0, true, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void focusing(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> xi(n), sigma(n);
  for (std::size_t i = 0; i < n; ++i) {
    xi[i] = 0.5 + 5.5 * static_cast<double>(i) / static_cast<double>(n);
    sigma[i] = 1.5 * static_cast<double>(i) / static_cast<double>(n);
  }
  std::vector<double> out(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) sqz::kernels::boyd_kleinman_grid_parallel(xi, sigma, 1e-9, out);
    else sqz::kernels::boyd_kleinman_grid_serial(xi, sigma, 1e-9, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n));
}

}  // namespace

BENCHMARK(tuning<false>)->Name("tuning/serial")->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(tuning<true>)->Name("tuning/parallel")->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(spectrum<false>)->Name("spectrum/serial")->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(spectrum<true>)->Name("spectrum/parallel")->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(focusing<false>)->Name("focusing/serial")->Arg(16)->Arg(64);
BENCHMARK(focusing<true>)->Name("focusing/parallel")->Arg(16)->Arg(64);

BENCHMARK_MAIN();
