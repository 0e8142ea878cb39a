#include <benchmark/benchmark.h>

#include <random>

#include "cfs/discrete_system.hpp"
#include "cfs/pair_engine.hpp"

namespace {

cfs::DiscreteMeasure random_measure(int points, int f, int n) {
  std::mt19937_64 rng(42);
  cfs::DiscreteMeasure rho;
  for (int i = 0; i < points; ++i) {
    rho.points.push_back(cfs::random_operator(f, n, 1.0, rng));
    rho.weights.push_back(1.0 / points);
  }
  rho.trace_c = 1.0;
  return rho;
}

void BM_PairRowSums(benchmark::State& state) {
  const auto rho = random_measure(static_cast<int>(state.range(0)), 4, 1);
  const cfs::KernelParams p{0.1, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(cfs::pair_row_sums(rho, p));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_PairRowSumsSerial(benchmark::State& state) {
  const auto rho = random_measure(static_cast<int>(state.range(0)), 4, 1);
  const cfs::KernelParams p{0.1, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(cfs::pair_row_sums_serial(rho, p));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

cfs::LatticePairs lattice_engine(int extent) {
  cfs::LatticeChart chart;
  chart.extent = {extent, extent, extent, extent};
  chart.embed = cfs::unitary_orbit_embedding(3, 0.3);
  return cfs::LatticePairs(chart, cfs::KernelParams{0.1, 0.0}, cfs::DivMode::Central2);
}

void lattice_rows(benchmark::State& state, bool parallel) {
  const auto eng = lattice_engine(static_cast<int>(state.range(0)));
  std::vector<std::size_t> rows(eng.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  auto f = [&](std::size_t i, std::size_t j, std::array<double, 1>& acc) { acc[0] += eng.weight(j) * eng.L(i, j); };
  for (auto _ : state) benchmark::DoNotOptimize(eng.row_sums<1>(rows, f, false, parallel));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(eng.size() * eng.size()));
}

void BM_LatticeRowSums(benchmark::State& state) { lattice_rows(state, true); }
void BM_LatticeRowSumsSerial(benchmark::State& state) { lattice_rows(state, false); }

}  // namespace

BENCHMARK(BM_PairRowSums)->Arg(64)->Arg(256);
BENCHMARK(BM_PairRowSumsSerial)->Arg(64)->Arg(256);
BENCHMARK(BM_LatticeRowSums)->Arg(4)->Arg(6);
BENCHMARK(BM_LatticeRowSumsSerial)->Arg(4)->Arg(6);

BENCHMARK_MAIN();
