// OpenMP collision kernel against its serial twin and the brute-force reference.
#include <benchmark/benchmark.h>

#include <cmath>

#include "bobylev/collision.hpp"

using namespace bobylev;

namespace {

CharFn aniso(GridPtr g, int modes) {
    return CharFn::axisymmetric_w(g, modes, [](double r, double u) {
        const double q = r * r * (1.0 + 0.5 * u * u);
        return -std::expm1(-0.5 * q / 1.25);
    });
}

void BM_apply(benchmark::State& st) {
    const auto g = make_grid(GridSpec{});
    const int m = static_cast<int>(st.range(0));
    const CollisionOperator op(KernelSpec{}, g, m, FlowMode::direct);
    const auto s = aniso(g, m);
    std::vector<double> out(static_cast<std::size_t>(m * g->size()));
    for (auto _ : st) {
        op.apply(s, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_apply_serial(benchmark::State& st) {
    const auto g = make_grid(GridSpec{});
    const int m = static_cast<int>(st.range(0));
    const CollisionOperator op(KernelSpec{}, g, m, FlowMode::direct);
    const auto s = aniso(g, m);
    std::vector<double> out(static_cast<std::size_t>(m * g->size()));
    for (auto _ : st) {
        op.apply_serial(s, out);
        benchmark::DoNotOptimize(out.data());
    }
}

// The reference integrates each node adaptively, so only a few nodes are timed.
void BM_reference(benchmark::State& st) {
    const auto g = make_grid(GridSpec{});
    const int m = static_cast<int>(st.range(0));
    const auto s = aniso(g, m);
    const std::vector<int> nodes{100, 250, 400};
    for (auto _ : st) benchmark::DoNotOptimize(collision_rhs_reference(KernelSpec{}, s, FlowMode::direct, nodes));
}

}  // namespace

BENCHMARK(BM_apply)->Arg(1)->Arg(5)->Arg(9)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_apply_serial)->Arg(1)->Arg(5)->Arg(9)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_reference)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
