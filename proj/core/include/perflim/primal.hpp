#pragma once

#include "perflim/criterion.hpp"
#include "perflim/lp.hpp"
#include "perflim/setup.hpp"

#include <optional>
#include <span>
#include <vector>

namespace perflim {

// Piecewise-linear error signal through (t[k], e[k]); zero after t.back().
struct GridSignal {
    std::vector<double> t;
    std::vector<double> e;
    double value(double s) const;
};

struct PrimalOptions {
    double tol = 1e-3;              // relative change between refinements
    std::size_t max_grid = 8192;    // node cap
    std::size_t initial_nodes = 1024;
    double horizon = 0.0;           // 0: 10 / x_min
    LpOptions lp;
};

struct PrimalResult {
    Criterion criterion = Criterion::MA;
    double value = 0.0;
    GridSignal signal;
    double moment_residual = 0.0;  // max |int e mode - target|
    bool converged = false;
    std::size_t nodes = 0;
    double horizon = 0.0;
    std::vector<double> history;
};

// Weights r with  int e(t) mode(t) dt = sum_k r[k] e[k]  for e piecewise linear on
// `grid` and zero after grid.back().
std::vector<double> moment_row(const Mode& m, std::span<const double> grid);

// Cost of a sampled signal. US needs the reference terms and subdivides segments.
double evaluate_cost(const GridSignal& s, Criterion crit, std::span<const PFTerm> w_terms = {});

// min over xi of max |e - xi| by bisection, with the zero tail included.
double fl_by_xi(const GridSignal& s);

// Upper bound from an admissible piecewise-linear error. `envelope` overrides pd.envelope.
PrimalResult solve_primal(const ProblemData& pd, Criterion crit,
                          const std::optional<EnvelopeT>& envelope = std::nullopt,
                          const PrimalOptions& opt = {});

}  // namespace perflim
