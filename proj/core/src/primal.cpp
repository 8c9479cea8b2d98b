#include "perflim/primal.hpp"

#include "perflim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace perflim {

double GridSignal::value(double s) const {
    if (t.empty() || s < t.front() || s > t.back()) return 0.0;
    auto it = std::upper_bound(t.begin(), t.end(), s);
    if (it == t.end()) return e.back();
    std::size_t i = static_cast<std::size_t>(it - t.begin());
    double a = t[i - 1], b = t[i];
    double lam = (s - a) / (b - a);
    return (1.0 - lam) * e[i - 1] + lam * e[i];
}

std::vector<double> moment_row(const Mode& m, std::span<const double> grid) {
    std::vector<double> r(grid.size(), 0.0);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        auto w = segment_weights(m.x, m.y, m.kind, grid[k], grid[k + 1]);
        r[k] += w.wa;
        r[k + 1] += w.wb;
    }
    return r;
}

double evaluate_cost(const GridSignal& s, Criterion crit, std::span<const PFTerm> w_terms) {
    double hi = 0.0, lo = 0.0;  // the zero tail is part of the signal
    for (double v : s.e) {
        hi = std::max(hi, v);
        lo = std::min(lo, v);
    }
    switch (crit) {
        case Criterion::MA: return std::max(hi, -lo);
        case Criterion::POS: return hi;
        case Criterion::OS: return 0.0 - lo;
        case Criterion::FL: {
            const double fl = 0.5 * (hi - lo);
            const double alt = fl_by_xi(s);
            if (std::abs(fl - alt) > 1e-12 * std::max(1.0, fl)) {
                std::ostringstream os;
                os << "fluctuation identity mismatch: " << fl << " vs " << alt;
                throw NumericalFailure(os.str());
            }
            return fl;
        }
        case Criterion::US: break;
    }
    constexpr int kSub = 16;
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < s.t.size(); ++k) {
        const double a = s.t[k], h = (s.t[k + 1] - a) / kSub;
        for (int q = 0; q < kSub; ++q) {
            double lam = static_cast<double>(q) / kSub;
            double e = (1.0 - lam) * s.e[k] + lam * s.e[k + 1];
            worst = std::max(worst, e - time_eval(w_terms, a + q * h));
        }
    }
    if (!s.t.empty()) {
        const double end = s.t.back();
        worst = std::max(worst, s.e.back() - time_eval(w_terms, end));
        for (int i = 1; i <= 400; ++i) worst = std::max(worst, -time_eval(w_terms, end * (1.0 + 3.0 * i / 400.0)));
    }
    return worst;
}

double fl_by_xi(const GridSignal& s) {
    double hi = 0.0, lo = 0.0;
    for (double v : s.e) {
        hi = std::max(hi, v);
        lo = std::min(lo, v);
    }
    auto spread = [&](double xi) {
        double up = 0.0, down = 0.0;
        for (double v : s.e) {
            up = std::max(up, v - xi);
            down = std::max(down, xi - v);
        }
        return std::pair{std::max(up, -xi), std::max(down, xi)};
    };
    double a = lo, b = hi;
    for (int it = 0; it < 200 && b > a; ++it) {
        double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        auto [up, down] = spread(mid);
        if (up > down) a = mid;
        else b = mid;
    }
    auto [up, down] = spread(0.5 * (a + b));
    return std::max(up, down);
}

namespace {

std::vector<double> make_grid(double horizon, std::size_t n, const std::optional<EnvelopeT>& env) {
    std::vector<double> t(n + 1);
    for (std::size_t k = 0; k <= n; ++k) t[k] = horizon * static_cast<double>(k) / static_cast<double>(n);
    if (env) {
        for (double b : env->breakpoints())
            if (b < horizon) t.push_back(b);
    }
    std::sort(t.begin(), t.end());
    std::vector<double> out;
    for (double s : t)
        if (out.empty() || s - out.back() > 1e-12 * horizon) out.push_back(s);
    out.back() = horizon;
    return out;
}

struct Bounds {
    double lo, hi;
};

// bounds on u = e/L - g for the homogenized program
Bounds cost_bounds(Criterion crit) {
    switch (crit) {
        case Criterion::MA:
        case Criterion::FL: return {-1.0, 1.0};
        case Criterion::OS: return {-1.0, kInf};
        case Criterion::POS:
        case Criterion::US: return {-kInf, 1.0};
    }
    return {-1.0, 1.0};
}

class PrimalSolver {
public:
    PrimalSolver(const ProblemData& pd, Criterion crit, const std::optional<EnvelopeT>& env, const PrimalOptions& opt)
        : pd_(pd), crit_(crit), env_(env), opt_(opt) {
        target_.assign(pd.modes.size(), 0.0);
        std::size_t iu = 0;
        for (std::size_t j = 0; j < pd.modes.size(); ++j)
            if (pd.modes[j].subspace == Subspace::U) target_[j] = pd.b_vec[iu++];
        double xm = pd.x_min();
        x_min_ = xm > 0.0 ? xm : 1.0;
        horizon_ = opt.horizon > 0.0 ? opt.horizon : 10.0 / x_min_;
    }

    PrimalResult run() {
        PrimalResult best;
        best.criterion = crit_;
        best.value = kInf;
        std::size_t n = opt_.initial_nodes;
        bool have_best = false;

        if (crit_ != Criterion::MA && crit_ != Criterion::FL) {
            auto grid = make_grid(horizon_, n, env_);
            if (auto sig = zero_cost_signal(grid)) {
                PrimalResult r = finish(std::move(*sig), grid);
                r.converged = true;
                r.history = {r.value};
                return r;
            }
        }

        std::vector<double> history;
        for (;;) {
            if (n > opt_.max_grid) break;
            auto grid = make_grid(horizon_, n, env_);
            auto round = solve_round(grid);
            if (!round) {
                if (have_best) break;
                horizon_ *= 2.0;
                n *= 2;
                if (n > opt_.max_grid) {
                    std::ostringstream os;
                    os << "primal program for " << to_string(crit_) << " stayed infeasible up to " << opt_.max_grid
                       << " nodes";
                    throw RefinementFailure(os.str(), NAN, NAN);
                }
                continue;
            }
            PrimalResult r = finish(std::move(round->signal), grid);
            history.push_back(r.value);
            if (!have_best || r.value < best.value) {
                best = r;
                have_best = true;
            }
            prev_ = best.signal;
            const std::size_t h = history.size();
            if (h >= 2) {
                double v0 = history[h - 1], v1 = history[h - 2];
                if (std::abs(v0 - v1) <= opt_.tol * std::max(std::abs(v0), 1e-9)) {
                    best.converged = true;
                    break;
                }
            }
            if (round->tail_pinned && std::exp(-x_min_ * horizon_) > 0.1 * opt_.tol) horizon_ *= 2.0;
            n *= 2;
        }
        if (!have_best) throw RefinementFailure("primal program produced no admissible signal", NAN, NAN);
        best.history = history;
        return best;
    }

private:
    struct Round {
        GridSignal signal;
        bool tail_pinned = false;
    };

    std::vector<double> reference_on(const std::vector<double>& grid) const {
        std::vector<double> g(grid.size(), 0.0);
        if (crit_ == Criterion::US)
            for (std::size_t k = 0; k < grid.size(); ++k) g[k] = time_eval(pd_.w_terms, grid[k]);
        return g;
    }

    std::vector<std::vector<double>> moment_rows(const std::vector<double>& grid) const {
        std::vector<std::vector<double>> R;
        for (const auto& m : pd_.modes) R.push_back(moment_row(m, grid));
        return R;
    }

    std::optional<double> boundary_value() const {
        if (pd_.closure == Closure::C0_alpha) return pd_.alpha;
        if (pd_.closure == Closure::C00) return 0.0;
        return std::nullopt;
    }

    // Feasibility of a zero-cost error on this grid.
    std::optional<GridSignal> zero_cost_signal(const std::vector<double>& grid) {
        const std::size_t N = grid.size() - 1;
        auto g = reference_on(grid);
        auto R = moment_rows(grid);
        LinearProgram lp;
        for (std::size_t k = 0; k < N; ++k) {
            double lo = -kInf, hi = kInf;
            if (crit_ == Criterion::OS) lo = 0.0;
            if (crit_ == Criterion::POS) hi = 0.0;
            if (crit_ == Criterion::US) hi = g[k];
            if (env_ && grid[k] <= env_->t_bar) {
                lo = std::max(lo, env_->phi_minus(grid[k]));
                hi = std::min(hi, env_->phi_plus(grid[k]));
            }
            if (lo > hi) return std::nullopt;
            lp.add_variable(0.0, lo, hi);
        }
        for (std::size_t j = 0; j < R.size(); ++j)
            lp.add_row(std::vector<double>(R[j].begin(), R[j].begin() + static_cast<std::ptrdiff_t>(N)), RowSense::Equal,
                       target_[j]);
        if (auto a = boundary_value()) {
            std::vector<double> row(N, 0.0);
            row[0] = 1.0;
            lp.add_row(std::move(row), RowSense::Equal, *a);
        }
        auto sol = solve_lp(lp, opt_.lp);
        if (sol.status != LpStatus::Optimal) return std::nullopt;
        GridSignal s{grid, std::vector<double>(grid.size(), 0.0)};
        for (std::size_t k = 0; k < N; ++k) s.e[k] = sol.x[k];
        return s;
    }

    std::optional<Round> solve_round(const std::vector<double>& grid) {
        const std::size_t N = grid.size() - 1;
        const bool fl = crit_ == Criterion::FL;
        auto g = reference_on(grid);
        auto R = moment_rows(grid);
        const Bounds bd = cost_bounds(crit_);

        LinearProgram lp;
        for (std::size_t k = 0; k < N; ++k) lp.add_variable(0.0, bd.lo, bd.hi);
        const std::size_t tau = lp.add_variable(1.0, 0.0, kInf);
        const std::size_t beta = fl ? lp.add_variable(0.0, -1.0, 1.0) : 0;

        auto blank = [&] { return std::vector<double>(lp.num_vars(), 0.0); };
        for (std::size_t j = 0; j < R.size(); ++j) {
            auto row = blank();
            double rg = 0.0, rsum = 0.0;
            for (std::size_t k = 0; k < N; ++k) {
                row[k] = R[j][k];
                rg += R[j][k] * g[k];
                rsum += R[j][k];
            }
            row[tau] = rg - target_[j];
            if (fl) row[beta] = rsum;
            lp.add_row(std::move(row), RowSense::Equal, 0.0);
        }
        // y_k = u_k + g_k tau (+ beta) is the scaled error at node k
        auto node_row = [&](std::size_t k, double tau_shift) {
            auto row = blank();
            row[k] = 1.0;
            row[tau] = g[k] - tau_shift;
            if (fl) row[beta] = 1.0;
            return row;
        };
        if (auto a = boundary_value()) lp.add_row(node_row(0, *a), RowSense::Equal, 0.0);
        if (env_) {
            for (std::size_t k = 0; k < N && grid[k] <= env_->t_bar; ++k) {
                lp.add_row(node_row(k, env_->phi_minus(grid[k])), RowSense::GreaterEqual, 0.0);
                lp.add_row(node_row(k, env_->phi_plus(grid[k])), RowSense::LessEqual, 0.0);
            }
        }

        std::vector<double> start;
        if (prev_) {
            double L = std::max(evaluate_cost(*prev_, crit_, pd_.w_terms), 1e-12);
            double xi = 0.0;
            if (fl) {
                double hi = 0.0, lo = 0.0;
                for (double v : prev_->e) {
                    hi = std::max(hi, v);
                    lo = std::min(lo, v);
                }
                xi = 0.5 * (hi + lo);
            }
            start.assign(lp.num_vars(), 0.0);
            for (std::size_t k = 0; k < N; ++k)
                start[k] = std::clamp((prev_->value(grid[k]) - xi) / L - (crit_ == Criterion::US ? g[k] / L : 0.0),
                                      bd.lo, bd.hi);
            start[tau] = 1.0 / L;
            if (fl) start[beta] = std::clamp(xi / L, -1.0, 1.0);
        }

        auto sol = solve_lp(lp, opt_.lp, start);
        if (sol.status == LpStatus::Infeasible) return std::nullopt;
        if (sol.status == LpStatus::Unbounded)
            throw NumericalFailure(std::string("homogenized primal for ") + to_string(crit_) +
                                   " is unbounded although no zero-cost error exists");
        const double t = sol.x[tau];
        if (!(t > 0.0)) return std::nullopt;
        Round out;
        out.signal.t = grid;
        out.signal.e.assign(grid.size(), 0.0);
        for (std::size_t k = 0; k < N; ++k) {
            double y = sol.x[k] + g[k] * t + (fl ? sol.x[beta] : 0.0);
            out.signal.e[k] = y / t;
        }
        const double u_last = sol.x[N - 1];
        const double tol = 1e-7 * std::max(1.0, std::abs(u_last));
        out.tail_pinned = std::abs(u_last - bd.lo) <= tol || std::abs(u_last - bd.hi) <= tol;
        return out;
    }

    PrimalResult finish(GridSignal s, const std::vector<double>& grid) const {
        if (auto a = boundary_value()) s.e[0] = *a;
        if (env_) {
            for (std::size_t k = 0; k < grid.size() && grid[k] <= env_->t_bar; ++k)
                s.e[k] = std::clamp(s.e[k], env_->phi_minus(grid[k]), env_->phi_plus(grid[k]));
        }
        PrimalResult r;
        r.criterion = crit_;
        r.nodes = grid.size();
        r.horizon = grid.back();
        for (std::size_t j = 0; j < pd_.modes.size(); ++j) {
            auto row = moment_row(pd_.modes[j], grid);
            double m = 0.0;
            for (std::size_t k = 0; k < grid.size(); ++k) m += row[k] * s.e[k];
            r.moment_residual = std::max(r.moment_residual, std::abs(m - target_[j]));
        }
        r.value = evaluate_cost(s, crit_, pd_.w_terms);
        r.signal = std::move(s);
        return r;
    }

    const ProblemData& pd_;
    Criterion crit_;
    std::optional<EnvelopeT> env_;
    const PrimalOptions& opt_;
    std::vector<double> target_;
    double x_min_ = 1.0;
    double horizon_ = 10.0;
    std::optional<GridSignal> prev_;
};

}  // namespace

PrimalResult solve_primal(const ProblemData& pd, Criterion crit, const std::optional<EnvelopeT>& envelope,
                          const PrimalOptions& opt) {
    if (crit == Criterion::US && !pd.reference_nonnegative)
        throw ValidationError("negative_reference", "undershoot needs a nonnegative reference w(t) >= 0");
    const std::optional<EnvelopeT>& env = envelope ? envelope : pd.envelope;
    if (env) {
        validate_envelope(*env);
        check_envelope_compatible(*env, pd.closure, pd.alpha);
    }
    PrimalSolver s(pd, crit, env, opt);
    return s.run();
}

}  // namespace perflim
