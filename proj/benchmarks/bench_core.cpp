// Microbenchmarks for the hot paths: consistency checks, selection, and the
// numerical primitives behind them.
#include <benchmark/benchmark.h>
#include <gridse/attacks.hpp>
#include <gridse/consistency.hpp>
#include <gridse/estimators.hpp>
#include <gridse/linalg.hpp>

#include <numeric>

using namespace gridse;

namespace {

struct Fixture {
  SystemModel model;
  Vector y;
  Vector x_prev;
  IndexSet all;

  explicit Fixture(int p) : model(synthesize_model(p, 3 * p, 42)) {
    Rng rng = make_rng(43, 0);
    x_prev = Vector(p);
    for (int j = 0; j < p; ++j) x_prev(j) = draw_normal(rng);
    const Vector x = model.A * x_prev;
    y = model.C * x;
    for (int i = 0; i < model.n; ++i) {
      y(i) += std::sqrt(model.sigma_v2) * draw_normal(rng);
    }
    // corrupt a third of the sensors
    for (int i = 0; i < model.n; i += 3) y(i) += 10.0;
    all.resize(model.n);
    std::iota(all.begin(), all.end(), 0);
  }
};

}  // namespace

static void BM_StaticCheck(benchmark::State& state) {
  const Fixture fix(static_cast<int>(state.range(0)));
  const ConsistencyVariant variant = ConsistencyVariant::static_euclidean();
  for (auto _ : state) {
    benchmark::DoNotOptimize(check_consistency(
        variant, fix.model.C, fix.model.A, fix.all, fix.y, 0.005,
        fix.model.sigma_v2));
  }
}
BENCHMARK(BM_StaticCheck)->Arg(10)->Arg(25)->Arg(50);

static void BM_PcnaSelect(benchmark::State& state) {
  const Fixture fix(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        pcna_select(fix.model, fix.x_prev, fix.y, 0.005));
  }
}
BENCHMARK(BM_PcnaSelect)->Arg(10)->Arg(25)->Arg(50);

static void BM_SeedCandidates(benchmark::State& state) {
  const Fixture fix(static_cast<int>(state.range(0)));
  Rng rng = make_rng(44, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(seed_candidates(
        fix.model.C, fix.y, 0.995, 1, 0.005, fix.model.sigma_v2, rng, 500));
  }
}
BENCHMARK(BM_SeedCandidates)->Arg(10)->Arg(25);

static void BM_MatrixPower(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  Rng rng = make_rng(45, 0);
  Matrix g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = draw_normal(rng);
  const Matrix a = g * g.transpose();
  for (auto _ : state) {
    benchmark::DoNotOptimize(matrix_power(a, -0.5));
  }
}
BENCHMARK(BM_MatrixPower)->Arg(10)->Arg(35);

static void BM_SpecificSensorAttack(benchmark::State& state) {
  const SystemModel model = make_ieee14_surrogate();
  const IndexSet meters = {0, 1, 2, 3, 4, 12, 14, 15, 16, 17, 18, 19, 27, 32};
  const Vector d = Vector::Constant(14, 50.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(specific_sensor_attack(model.C, meters, d));
  }
}
BENCHMARK(BM_SpecificSensorAttack);

BENCHMARK_MAIN();
