#include "etacurv/flatcase.hpp"
#include "etacurv/geometry.hpp"
#include "etacurv/parallel.hpp"
#include "etacurv/solver.hpp"
#include "etacurv/symm.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace etacurv;

std::vector<double> positive_vector(int n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) {
    x = u(rng);
  }
  return v;
}

void BM_SigmaAll(benchmark::State& state) {
  const auto v = positive_vector(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(symm::sigma_all(v));
  }
}
BENCHMARK(BM_SigmaAll)->DenseRange(2, 8, 2);

void BM_OperatorCoefficients(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const symm::SpectrumVector lambda(positive_vector(n), n / 2 + 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(symm::operator_coefficients(lambda));
  }
}
BENCHMARK(BM_OperatorCoefficients)->DenseRange(2, 8, 2);

struct SurfaceCase {
  geometry::SphereGrid grid;
  geometry::RadialField rho;
  solver::PrescribedData data;
};

SurfaceCase surface_case(int n_lat) {
  set_thread_count(1);
  auto grid = geometry::build_grid(2, geometry::GridMode::Full2d, {2 * n_lat, n_lat});
  auto rho = grid.sample([](const SmallVec& x) { return 1.2 + 0.03 * x(0) * x(2); });
  return {std::move(grid), {rho}, {solver::power_decay(1.25, 3.0), 0.5, 2.0}};
}

void BM_SurfaceJet(benchmark::State& state) {
  const auto c = surface_case(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(geometry::surface_jet(c.grid, c.rho));
  }
  state.SetItemsProcessed(state.iterations() * c.grid.size());
}
BENCHMARK(BM_SurfaceJet)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_SurfaceResidual(benchmark::State& state) {
  const auto c = surface_case(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solver::residual(c.grid, c.rho, c.data, 2));
  }
}
BENCHMARK(BM_SurfaceResidual)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_SurfaceJacobian(benchmark::State& state) {
  const auto c = surface_case(static_cast<int>(state.range(0)));
  solver::NewtonConfig cfg;
  cfg.jacobian = state.range(1) ? solver::JacobianMode::FiniteDifference : solver::JacobianMode::Analytic;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solver::jacobian(c.grid, c.rho, c.data, 2, cfg));
  }
}
BENCHMARK(BM_SurfaceJacobian)->Args({16, 0})->Args({16, 1})->Args({32, 0})->Unit(benchmark::kMillisecond);

void BM_FlatJacobian(benchmark::State& state) {
  set_thread_count(1);
  flatcase::DomainSpec spec;
  spec.h = 1.0 / static_cast<double>(state.range(0));
  const auto grid = flatcase::build_domain(spec);
  const auto f = flatcase::flat_constant(1.0);
  const Eigen::VectorXd phi = flatcase::initial_guess(grid, f, 2);
  const flatcase::FlatConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(flatcase::flat_jacobian(grid, phi, f, 2, cfg));
  }
}
BENCHMARK(BM_FlatJacobian)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
