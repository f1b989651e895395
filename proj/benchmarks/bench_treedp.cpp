#include "treedp/centering.hpp"
#include "treedp/dp.hpp"
#include "treedp/ocp.hpp"
#include "treedp/opf.hpp"
#include "treedp/polyhedra.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace treedp;

namespace {

HPolyhedron random_polytope(Index dim, Index rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  Matrix A(2 * dim + rows, dim);
  Vector b = Vector::Constant(2 * dim + rows, 3.0);
  A.topRows(dim) = Matrix::Identity(dim, dim);
  A.middleRows(dim, dim) = -Matrix::Identity(dim, dim);
  for (Index r = 0; r < rows; ++r) {
    Vector a(dim);
    for (Index k = 0; k < dim; ++k) a(k) = N(rng);
    A.row(2 * dim + r) = a.normalized().transpose();
    b(2 * dim + r) = 1.0;
  }
  return HPolyhedron(A, b);
}

void BM_FourierMotzkin(benchmark::State& state) {
  const Index dim = state.range(0);
  const auto P = random_polytope(dim, 8, 5);
  const auto keep = VariableIndexSet::range(1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(fourier_motzkin_project(P, keep));
}
BENCHMARK(BM_FourierMotzkin)->Arg(3)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_InscribedEllipsoid(benchmark::State& state) {
  const auto P = random_polytope(state.range(0), 6, 7);
  for (auto _ : state) benchmark::DoNotOptimize(max_volume_inscribed_ellipsoid(P));
}
BENCHMARK(BM_InscribedEllipsoid)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_OcpDemo(benchmark::State& state) {
  const auto spec = LtiOcpSpec::reference_instance();
  OcpDemoConfig cfg;
  cfg.variant = state.range(0) == 0 ? OcpVariant::ExactAllStages : OcpVariant::EllipsoidAtStage;
  for (auto _ : state) benchmark::DoNotOptimize(run_ocp_demo(spec, cfg));
}
BENCHMARK(BM_OcpDemo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DcOpf(benchmark::State& state) {
  const auto grid = feeder18();
  const auto part = feeder18_partition();
  for (auto _ : state) benchmark::DoNotOptimize(run_opf_demo(grid, part, {}));
}
BENCHMARK(BM_DcOpf)->Unit(benchmark::kMillisecond);

void BM_AcSampling(benchmark::State& state) {
  const auto grid = feeder18();
  const auto leaves = analyze_partition(grid, feeder18_partition());
  AcSamplingConfig cfg;
  cfg.n_samples = state.range(0);
  cfg.threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(ac_feasible_region(grid, leaves[0], 1.0, cfg));
}
BENCHMARK(BM_AcSampling)->Args({500, 1})->Args({500, 2})->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
