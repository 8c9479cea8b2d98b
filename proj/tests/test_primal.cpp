#include "perflim/dual.hpp"
#include "perflim/errors.hpp"
#include "perflim/primal.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace perflim;

namespace {

const RatFun kStep{Poly{1.0}, Poly{0.0, 1.0}};

RatFun first_order(double z, double p) { return RatFun{Poly{-z, 1.0}, Poly{-p, 1.0}}; }

double moment(const Mode& m, std::span<const double> grid, std::span<const double> e) {
    auto r = moment_row(m, grid);
    double v = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) v += r[k] * e[k];
    return v;
}

}  // namespace

TEST(MomentRow, UnitHat) {
    std::vector<double> g{0.0, 1.0}, e{1.0, 1.0};
    EXPECT_NEAR(moment(Mode{1.0, 0.0, ModeKind::Cos}, g, e), 1.0 - std::exp(-1.0), 1e-15);
}

TEST(MomentRow, FullMassOfConstantSignal) {
    std::vector<double> g, e;
    for (int k = 0; k <= 4000; ++k) {
        g.push_back(40.0 * k / 4000.0);
        e.push_back(1.0);
    }
    EXPECT_NEAR(moment(Mode{1.0, 0.0, ModeKind::Cos}, g, e), 1.0, 1e-12);
}

TEST(MomentRow, RampAgainstQuadrature) {
    std::vector<double> g{0.0, 0.25, 0.6, 1.0}, e = g;
    Mode m{1.0, 2.0, ModeKind::Sin};
    double q = oracle::integrate([](double t) { return t * std::exp(-t) * std::sin(2.0 * t); }, 0.0, 1.0);
    EXPECT_NEAR(moment(m, g, e), q, 1e-8);
}

TEST(EvaluateCost, Zero) {
    GridSignal s{{0.0, 1.0, 2.0}, {0.0, 0.0, 0.0}};
    for (Criterion c : {Criterion::MA, Criterion::POS, Criterion::OS, Criterion::FL})
        EXPECT_EQ(evaluate_cost(s, c), 0.0);
}

TEST(EvaluateCost, Sawtooth) {
    GridSignal s{{0.0, 1.0, 2.0, 3.0, 4.0}, {0.0, 3.0, -1.0, 2.0, 0.0}};
    EXPECT_DOUBLE_EQ(evaluate_cost(s, Criterion::FL), 2.0);
    EXPECT_DOUBLE_EQ(evaluate_cost(s, Criterion::MA), 3.0);
    EXPECT_DOUBLE_EQ(evaluate_cost(s, Criterion::OS), 1.0);
    EXPECT_DOUBLE_EQ(evaluate_cost(s, Criterion::POS), 3.0);
    EXPECT_DOUBLE_EQ(fl_by_xi(s), 2.0);
}

TEST(EvaluateCost, ZeroTailCounts) {
    GridSignal s{{0.0, 1.0}, {2.0, 1.0}};
    EXPECT_DOUBLE_EQ(evaluate_cost(s, Criterion::OS), 0.0);
    EXPECT_DOUBLE_EQ(evaluate_cost(s, Criterion::FL), 1.0);
    EXPECT_DOUBLE_EQ(s.value(5.0), 0.0);
}

TEST(EvaluateCost, UndershootAgainstStep) {
    auto w = partial_fractions(kStep);
    GridSignal s{{0.0, 1.0, 2.0}, {1.0, 1.5, 0.2}};
    EXPECT_NEAR(evaluate_cost(s, Criterion::US, w), 0.5, 1e-14);
}

TEST(FlIdentity, RandomSignals) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        GridSignal s;
        const int n = 2 + trial % 40;
        for (int k = 0; k < n; ++k) {
            s.t.push_back(0.1 * k);
            s.e.push_back(u(rng));
        }
        double hi = 0.0, lo = 0.0;
        for (double v : s.e) {
            hi = std::max(hi, v);
            lo = std::min(lo, v);
        }
        EXPECT_NEAR(fl_by_xi(s), 0.5 * (hi - lo), 1e-12);
        EXPECT_NEAR(evaluate_cost(s, Criterion::FL), fl_by_xi(s), 1e-12);
    }
}

TEST(SolvePrimal, FirstOrderAboveDual) {
    auto pd = validate_problem(first_order(2.0, 1.0), kStep);
    for (Criterion c : {Criterion::OS, Criterion::MA, Criterion::POS, Criterion::FL}) {
        auto p = solve_primal(pd, c);
        double d = solve_dual(pd, c).value;
        EXPECT_GE(p.value, d - 1e-6) << to_string(c);
        EXPECT_LE(p.value - d, 0.02 * d) << to_string(c);
        EXPECT_LE(p.moment_residual, 1e-8) << to_string(c);
    }
}

TEST(SolvePrimal, RefinementDoesNotIncreaseValue) {
    auto pd = validate_problem(first_order(3.0, 1.0), kStep);
    PrimalOptions o;
    o.tol = 1e-6;  // run to the node cap
    for (Criterion c : {Criterion::OS, Criterion::MA}) {
        auto p = solve_primal(pd, c, std::nullopt, o);
        ASSERT_GE(p.history.size(), 2u);
        for (std::size_t i = 1; i < p.history.size(); ++i)
            EXPECT_LE(p.history[i], p.history[i - 1] + 1e-6) << to_string(c) << " round " << i;
    }
}

TEST(SolvePrimal, BoundaryValueInC0Alpha) {
    auto pd = validate_problem(RatFun{Poly{1.0}, Poly{5.0, -2.0, 1.0}}, kStep);
    ASSERT_EQ(pd.closure, Closure::C0_alpha);
    for (Criterion c : {Criterion::MA, Criterion::FL}) {
        auto p = solve_primal(pd, c);
        EXPECT_EQ(p.signal.e.front(), pd.alpha) << to_string(c);
        EXPECT_LE(p.moment_residual, 1e-8);
    }
}

TEST(SolvePrimal, EnvelopeNodesHold) {
    EnvelopeT env{1.0, {{0.0, 1.0}, {-0.1, -0.1}}, {{0.0, 1.0}, {2.0, 2.0}}};
    auto pd = validate_problem(RatFun{Poly{1.0}, Poly{5.0, -2.0, 1.0}}, kStep, env);
    auto p = solve_primal(pd, Criterion::OS);
    EXPECT_LE(p.value, 0.05);
    EXPECT_LE(p.nodes, 4096u);
    EXPECT_LE(p.moment_residual, 1e-8);
    for (std::size_t k = 0; k < p.signal.t.size() && p.signal.t[k] <= env.t_bar; ++k) {
        EXPECT_GE(p.signal.e[k], env.phi_minus(p.signal.t[k]));
        EXPECT_LE(p.signal.e[k], env.phi_plus(p.signal.t[k]));
    }
    // the breakpoint is a node
    EXPECT_NE(std::find(p.signal.t.begin(), p.signal.t.end(), 1.0), p.signal.t.end());
}

TEST(SolvePrimal, NoModesGivesBoundaryOnlySignal) {
    auto pd = validate_problem(RatFun{Poly{1.0}, Poly{1.0, 1.0}}, kStep);
    EXPECT_DOUBLE_EQ(solve_primal(pd, Criterion::MA).value, 1.0);
    EXPECT_DOUBLE_EQ(solve_primal(pd, Criterion::FL).value, 0.5);
    EXPECT_DOUBLE_EQ(solve_primal(pd, Criterion::OS).value, 0.0);
}

TEST(SolvePrimal, UndershootNeedsNonnegativeReference) {
    RatFun w{Poly{1.0, 1.0}, Poly{5.0, 2.0, 1.0}};
    auto pd = validate_problem(first_order(1.0, 2.0), w);
    EXPECT_THROW(solve_primal(pd, Criterion::US), ValidationError);
}

TEST(SolvePrimal, EnvelopeMustAdmitBoundaryValue) {
    auto pd = validate_problem(RatFun{Poly{1.0}, Poly{5.0, -2.0, 1.0}}, kStep);
    EnvelopeT low{1.0, {{0.0, 1.0}, {-0.1, -0.1}}, {{0.0, 1.0}, {0.5, 0.5}}};
    EXPECT_THROW(solve_primal(pd, Criterion::OS, low), ValidationError);
}
