#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace perflim {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { LessEqual, Equal, GreaterEqual };

// maximize cost^T x  subject to  rows  and  lower <= x <= upper.
// Rows are stored densely, one vector per row.
struct LinearProgram {
    std::vector<double> cost;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::vector<double>> rows;
    std::vector<RowSense> sense;
    std::vector<double> rhs;

    std::size_t num_vars() const noexcept { return cost.size(); }
    std::size_t num_rows() const noexcept { return rows.size(); }

    // New variable gets a zero coefficient in every existing row.
    std::size_t add_variable(double c, double lo = 0.0, double hi = kInf);
    std::size_t add_row(std::vector<double> coeffs, RowSense s, double b);
    void set(std::size_t row, std::size_t var, double v) { rows[row][var] = v; }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus s);

struct LpOptions {
    double feas_tol = 1e-9;
    double opt_tol = 1e-9;
    double pivot_tol = 1e-10;
    std::size_t max_iter = 0;  // 0: 50 * (rows + vars) + 1000
    int bland_after = 30;      // consecutive degenerate pivots before Bland's rule
    int refactor_every = 50;
};

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
    // Row multipliers for the maximization: y >= 0 on <= rows, y <= 0 on >= rows.
    std::vector<double> duals;
    std::size_t iterations = 0;
    double primal_residual = 0.0;
    double complementarity_residual = 0.0;
};

// `start` optionally gives initial values for the structural variables; values
// strictly inside the bounds are allowed and speed up warm restarts.
LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opt = {},
                    std::span<const double> start = {});

// Lagrangian upper bound  b^T y + sum_j max_{l_j <= x_j <= u_j} (c_j - a_j^T y) x_j.
double dual_objective(const LinearProgram& lp, std::span<const double> y, double tol = 0.0);

}  // namespace perflim
