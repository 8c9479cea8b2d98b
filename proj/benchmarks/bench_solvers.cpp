#include "perflim/dual.hpp"
#include "perflim/lp.hpp"
#include "perflim/primal.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace perflim;

namespace {

const RatFun kStep{Poly{1.0}, Poly{0.0, 1.0}};

ProblemData first_order() { return validate_problem(RatFun{Poly{-2.0, 1.0}, Poly{-1.0, 1.0}}, kStep); }

ProblemData oscillatory_zeros() {
    RatFun p{Poly{-2.0, 1.0} * Poly{25.25, -1.0, 1.0}, Poly{-1.0, 1.0} * Poly{4.0, 1.0} * Poly{5.0, 1.0}};
    return validate_problem(p, kStep);
}

// Dense box-bounded LP, m rows by 4m columns.
LinearProgram dense_lp(int m) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    LinearProgram lp;
    for (int j = 0; j < 4 * m; ++j) lp.add_variable(u(rng), -1.0, 1.0);
    for (int i = 0; i < m; ++i) {
        std::vector<double> r(4 * m);
        for (double& a : r) a = u(rng);
        lp.add_row(std::move(r), RowSense::LessEqual, 1.0);
    }
    return lp;
}

}  // namespace

static void BM_DenseLp(benchmark::State& st) {
    auto lp = dense_lp(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(solve_lp(lp).objective);
}
BENCHMARK(BM_DenseLp)->Arg(10)->Arg(40)->Arg(120)->Unit(benchmark::kMillisecond);

static void BM_DualFirstOrder(benchmark::State& st) {
    auto pd = first_order();
    const auto crit = static_cast<Criterion>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(solve_dual(pd, crit).value);
    st.SetLabel(to_string(crit));
}
BENCHMARK(BM_DualFirstOrder)
    ->Arg(static_cast<int>(Criterion::OS))
    ->Arg(static_cast<int>(Criterion::MA))
    ->Arg(static_cast<int>(Criterion::FL))
    ->Unit(benchmark::kMillisecond);

static void BM_DualOscillatoryZeros(benchmark::State& st) {
    auto pd = oscillatory_zeros();
    for (auto _ : st) benchmark::DoNotOptimize(solve_dual(pd, Criterion::MA).value);
}
BENCHMARK(BM_DualOscillatoryZeros)->Unit(benchmark::kMillisecond);

static void BM_PrimalFirstOrder(benchmark::State& st) {
    auto pd = first_order();
    for (auto _ : st) benchmark::DoNotOptimize(solve_primal(pd, Criterion::MA).value);
}
BENCHMARK(BM_PrimalFirstOrder)->Unit(benchmark::kMillisecond);

static void BM_Roots(benchmark::State& st) {
    Poly p = Poly{-2.0, 1.0} * Poly{25.25, -1.0, 1.0} * Poly{-1.0, 1.0} * Poly{4.0, 1.0} * Poly{5.0, 1.0, 1.0};
    for (auto _ : st) benchmark::DoNotOptimize(poly_roots(p).size());
}
BENCHMARK(BM_Roots);

BENCHMARK_MAIN();
