#include "perflim/dual.hpp"

#include "perflim/analytic.hpp"
#include "perflim/errors.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <sstream>

namespace perflim {

namespace {

constexpr std::size_t kMaxUniform = 16384;
constexpr std::size_t kMaxTail = 4096;
constexpr std::size_t kTailSamples = 400;
constexpr int kSubsamples = 10;

double pos_part(double v) { return v > 0.0 ? v : 0.0; }

std::vector<double> initial_grid(std::span<const Mode> modes, double th, std::size_t log_points) {
    std::vector<double> t{0.0};
    const std::size_t L = std::max<std::size_t>(log_points, 2);
    const double t0 = 1e-6 * th;
    for (std::size_t i = 0; i < L; ++i)
        t.push_back(t0 * std::pow(th / t0, static_cast<double>(i) / static_cast<double>(L - 1)));
    double ymax = 0.0;
    for (const auto& m : modes) ymax = std::max(ymax, m.y);
    double h = th / static_cast<double>(L);
    if (ymax > 0.0) h = std::min(h, std::numbers::pi / (8.0 * ymax));
    std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(std::ceil(th / h)), kMaxUniform);
    for (std::size_t i = 1; i <= count; ++i) t.push_back(th * static_cast<double>(i) / static_cast<double>(count));
    std::sort(t.begin(), t.end());
    std::vector<double> out;
    for (double s : t)
        if (out.empty() || s - out.back() > 1e-12 * th) out.push_back(s);
    out.back() = th;
    return out;
}

// Sign constraints past the horizon, as columns of psi_j(t) = e^{x_min t} mode_j(t).
// The last columns stand for t -> inf, where only the slowest modes survive.
struct TailColumns {
    std::vector<double> t;
    std::vector<std::vector<double>> psi;  // psi[k][j]
    std::vector<bool> slowest;             // per mode
};

TailColumns tail_columns(std::span<const Mode> modes, double th, bool finite_nodes = true) {
    TailColumns out;
    if (modes.empty()) return out;
    double xmin = std::numeric_limits<double>::infinity(), ymax = 0.0;
    for (const auto& m : modes) {
        xmin = std::min(xmin, m.x);
        ymax = std::max(ymax, m.y);
    }
    const double same = 1e-12 * std::max(1.0, xmin);
    double gap = std::numeric_limits<double>::infinity();
    bool oscillates = false;
    out.slowest.resize(modes.size());
    for (std::size_t j = 0; j < modes.size(); ++j) {
        out.slowest[j] = modes[j].x - xmin <= same;
        if (!out.slowest[j]) gap = std::min(gap, modes[j].x - xmin);
        else if (modes[j].y > 0.0) oscillates = true;
    }
    auto scaled = [&](const Mode& m, double t) {
        double d = std::exp(-(m.x - xmin) * t);
        return m.kind == ModeKind::Cos ? d * std::cos(m.y * t) : d * std::sin(m.y * t);
    };
    if (finite_nodes && std::isfinite(gap)) {
        const double far = th + std::log(1e16) / gap;
        double h = (far - th) / 256.0;
        if (ymax > 0.0) h = std::min(h, std::numbers::pi / (8.0 * ymax));
        std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(std::ceil((far - th) / h)), kMaxTail);
        for (std::size_t i = 1; i <= count; ++i) {
            double t = th + (far - th) * static_cast<double>(i) / static_cast<double>(count);
            std::vector<double> col(modes.size());
            for (std::size_t j = 0; j < modes.size(); ++j) col[j] = scaled(modes[j], t);
            out.t.push_back(t);
            out.psi.push_back(std::move(col));
        }
    }
    const int phases = oscillates ? 16 : 1;
    for (int p = 0; p < phases; ++p) {
        const double th_p = 2.0 * std::numbers::pi * p / phases;
        std::vector<double> col(modes.size(), 0.0);
        for (std::size_t j = 0; j < modes.size(); ++j) {
            if (!out.slowest[j]) continue;
            if (modes[j].y == 0.0) col[j] = 1.0;
            else col[j] = modes[j].kind == ModeKind::Cos ? std::cos(th_p) : std::sin(th_p);
        }
        out.t.push_back(std::numeric_limits<double>::infinity());
        out.psi.push_back(std::move(col));
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double v = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) v += a[j] * b[j];
    return v;
}

std::vector<double> trapezoid(const std::vector<double>& t) {
    std::vector<double> w(t.size(), 0.0);
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        double h = 0.5 * (t[k + 1] - t[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    return w;
}

// phi[j][k] = mode j at t_k
std::vector<std::vector<double>> tabulate(std::span<const Mode> modes, const std::vector<double>& t) {
    std::vector<std::vector<double>> phi(modes.size(), std::vector<double>(t.size()));
    for (std::size_t j = 0; j < modes.size(); ++j)
        for (std::size_t k = 0; k < t.size(); ++k) phi[j][k] = modes[j].value(t[k]);
    return phi;
}

double antiderivative(std::span<const Mode> modes, std::span<const double> c, double t) {
    double v = 0.0;
    for (std::size_t j = 0; j < modes.size(); ++j)
        if (c[j] != 0.0) v += c[j] * mode_antiderivative(modes[j].x, modes[j].y, modes[j].kind, t);
    return v;
}

std::vector<double> insert_midpoints(const std::vector<double>& t) {
    std::vector<double> out;
    out.reserve(2 * t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        out.push_back(t[k]);
        if (k + 1 < t.size()) out.push_back(0.5 * (t[k] + t[k + 1]));
    }
    return out;
}

std::vector<double> merge_points(const std::vector<double>& t, std::vector<double> extra, double th) {
    extra.insert(extra.end(), t.begin(), t.end());
    std::sort(extra.begin(), extra.end());
    std::vector<double> out;
    for (double s : extra) {
        if (s < 0.0 || s > th) continue;
        if (out.empty() || s - out.back() > 1e-13 * th) out.push_back(s);
    }
    return out;
}

struct Candidate {
    double value = -std::numeric_limits<double>::infinity();
    double kappa = 0.0;
    int sign = 1;
    bool eligible = false;
    CertificateCheck check;
    double correction = 0.0;
    std::vector<double> dir;  // oriented, before scaling by kappa
};

}  // namespace

double certificate_value(std::span<const Mode> modes, std::span<const double> coeffs, double t) {
    double v = 0.0;
    for (std::size_t j = 0; j < modes.size(); ++j)
        if (coeffs[j] != 0.0) v += coeffs[j] * modes[j].value(t);
    return v;
}

std::vector<double> dual_objective_vector(const ProblemData& pd, Criterion crit) {
    std::vector<double> g(pd.modes.size(), 0.0);
    std::size_t iu = 0, ivw = 0;
    for (std::size_t j = 0; j < pd.modes.size(); ++j) {
        if (pd.modes[j].subspace == Subspace::U) {
            double b = pd.b_vec[iu++];
            if (crit != Criterion::US) g[j] = b;
        } else {
            double u = pd.us_obj[ivw++];
            if (crit == Criterion::US) g[j] = u;
        }
    }
    return g;
}

double compute_sharp_correction(Criterion crit, Closure closure, double alpha, const CertificateMasses& m,
                                SharpVariant variant) {
    if (closure == Closure::C0) throw ContractViolation("f# correction is undefined in closure C0");
    const double total = m.total;
    if (variant == SharpVariant::Lemma) {
        if (crit == Criterion::FL) return alpha * (0.5 - m.positive);
        return 0.0;
    }
    switch (crit) {
        case Criterion::MA: return std::abs(alpha) * (1.0 - total);
        case Criterion::POS: return pos_part(alpha) * (1.0 - total);
        case Criterion::OS: return pos_part(-alpha) * (1.0 - total);
        case Criterion::US: return 0.0;
        case Criterion::FL: return pos_part(alpha) * (0.5 - m.positive) + pos_part(-alpha) * (0.5 + m.negative);
    }
    return 0.0;
}

ProblemData reduce_by_gamma(const ProblemData& pd, Criterion crit) {
    if (crit != Criterion::OS && crit != Criterion::US)
        throw ContractViolation("gamma reduction only applies to OS and US");
    if (!pd.ref_zeros.empty()) throw ContractViolation("gamma reduction needs a reference without RHP zeros");
    if (crit == Criterion::US && !pd.reference_nonnegative)
        throw ValidationError("negative_reference", "undershoot needs a nonnegative reference");
    const double gamma = gamma_of(pd);
    auto keep = [gamma](cplx p) { return p.imag() == 0.0 || !(p.real() < gamma); };
    ProblemData out = pd;
    out.plant_zeros.clear();
    out.plant_poles.clear();
    for (cplx z : pd.plant_zeros)
        if (keep(z)) out.plant_zeros.push_back(z);
    for (cplx p : pd.plant_poles)
        if (keep(p)) out.plant_poles.push_back(p);
    out.modes = build_modes(out.plant_zeros, out.plant_poles, out.ref_zeros);
    out.b_vec = build_rhs(out.reference, out.plant_zeros);
    out.us_obj = build_us_objective(out.reference, out.plant_poles, out.ref_zeros);
    return out;
}

double dual_horizon(const ProblemData& pd, const DualOptions& opt) {
    if (opt.horizon > 0.0) return opt.horizon;
    double xm = pd.x_min();
    if (!(xm > 0.0)) return 10.0;
    return std::log(1.0 / opt.eps_tail) / xm;
}

CertificateCheck inspect_certificate(std::span<const Mode> modes, Criterion crit, std::span<const double> coeffs,
                                     std::span<const double> grid, double horizon) {
    CertificateCheck out;
    if (std::all_of(coeffs.begin(), coeffs.end(), [](double c) { return c == 0.0; })) return out;
    std::vector<double> fallback;
    if (grid.size() < 2) {
        fallback = initial_grid(modes, horizon, DualOptions{}.log_points);
        grid = fallback;
    }

    std::vector<double> ts;
    ts.reserve(grid.size() * kSubsamples + kTailSamples + 1);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double a = grid[k], h = (grid[k + 1] - grid[k]) / kSubsamples;
        for (int s = 0; s < kSubsamples; ++s) ts.push_back(a + s * h);
    }
    ts.push_back(grid.back());
    const double t_end = std::max(4.0 * horizon, grid.back());
    for (std::size_t i = 1; i <= kTailSamples && t_end > grid.back(); ++i)
        ts.push_back(grid.back() + (t_end - grid.back()) * static_cast<double>(i) / kTailSamples);

    std::vector<double> e(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) e[i] = certificate_value(modes, coeffs, ts[i]);
    for (double v : e) out.sup_abs = std::max(out.sup_abs, std::abs(v));

    const int sgn = dual_sign(crit);
    if (sgn != 0 && out.sup_abs > 0.0) {
        double worst = 0.0, bound = 0.0;
        std::vector<double> lip(modes.size());
        for (std::size_t j = 0; j < modes.size(); ++j) lip[j] = std::abs(coeffs[j]) * std::hypot(modes[j].x, modes[j].y);
        for (std::size_t i = 0; i < ts.size(); ++i) {
            double v = -sgn * e[i];  // positive means violated
            if (v > worst) {
                worst = v;
                out.violation_at = ts[i];
            }
            if (i + 1 < ts.size()) {
                double L = 0.0;
                for (std::size_t j = 0; j < modes.size(); ++j) L += lip[j] * std::exp(-modes[j].x * ts[i]);
                double local = std::max(v, -sgn * e[i + 1]) + 0.5 * L * (ts[i + 1] - ts[i]);
                bound = std::max(bound, local);
            }
        }
        out.max_sign_violation = worst / out.sup_abs;
        out.violation_bound = pos_part(bound) / out.sup_abs;

        // as t -> inf the slowest modes decide the sign; measured against the coefficients
        auto tc = tail_columns(modes, horizon, false);
        double big = 0.0, tworst = 0.0;
        for (double c : coeffs) big = std::max(big, std::abs(c));
        for (const auto& col : tc.psi) tworst = std::max(tworst, -sgn * dot(coeffs, col));
        if (tworst > 0.0) {
            double rel = tworst / big;
            out.violation_bound = std::max(out.violation_bound, rel);
            if (rel > out.max_sign_violation) {
                out.max_sign_violation = rel;
                out.violation_at = std::numeric_limits<double>::infinity();
            }
        }
    }

    // sign changes
    auto f = [&](double t) { return certificate_value(modes, coeffs, t); };
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
        if (e[i] == 0.0 && i > 0) {
            out.roots.push_back(ts[i]);
            continue;
        }
        if ((e[i] < 0.0 && e[i + 1] > 0.0) || (e[i] > 0.0 && e[i + 1] < 0.0)) {
            std::uintmax_t it = 100;
            auto r = boost::math::tools::toms748_solve(f, ts[i], ts[i + 1], e[i], e[i + 1],
                                                       boost::math::tools::eps_tolerance<double>(50), it);
            out.roots.push_back(0.5 * (r.first + r.second));
        }
    }

    std::vector<double> cuts{0.0};
    cuts.insert(cuts.end(), out.roots.begin(), out.roots.end());
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        double a = cuts[i];
        double Fa = antiderivative(modes, coeffs, a);
        double Fb = i + 1 < cuts.size() ? antiderivative(modes, coeffs, cuts[i + 1]) : 0.0;
        double piece = Fb - Fa;
        if (piece > 0.0) out.masses.positive += piece;
        else out.masses.negative += piece;
    }
    out.masses.total = out.masses.positive - out.masses.negative;
    return out;
}

CertificateCheck verify_certificate(const ProblemData& pd, Criterion crit, std::span<const double> coeffs,
                                    const DualOptions& opt) {
    if (coeffs.size() != pd.modes.size()) throw std::invalid_argument("certificate length does not match the modes");
    for (double c : coeffs)
        if (!std::isfinite(c)) throw std::invalid_argument("certificate coefficients must be finite");
    const double th = dual_horizon(pd, opt);
    auto grid = initial_grid(pd.modes, th, opt.log_points);
    auto chk = inspect_certificate(pd.modes, crit, coeffs, grid, th);
    if (chk.max_sign_violation > opt.cert_tol) {
        std::ostringstream os;
        os << "certificate violates its sign constraint by " << chk.max_sign_violation << " (relative) near t="
           << chk.violation_at;
        throw CertificateRejected(os.str(), chk.max_sign_violation, chk.violation_at);
    }
    return chk;
}

namespace {

class DualSolver {
public:
    DualSolver(const ProblemData& pd, Criterion crit, const DualOptions& opt)
        : pd_(pd), crit_(crit), opt_(opt), modes_(pd.modes) {
        n_ = modes_.size();
        g_ = dual_objective_vector(pd, crit);
        alpha_ = pd.closure == Closure::C0_alpha ? pd.alpha : 0.0;
        th_ = dual_horizon(pd, opt);
        if (dual_sign(crit) != 0) tail_cols_ = tail_columns(modes_, th_);
        double gmax = 1.0;
        for (double v : g_) gmax = std::max(gmax, std::abs(v));
        abs_floor_ = opt.abs_tol * gmax;
        tail_.resize(n_);
        mass_.resize(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            tail_[j] = std::exp(-modes_[j].x * th_) / modes_[j].x;
            mass_[j] = modes_[j].mass();
        }
        if (opt.sharp == SharpVariant::Lemma && crit == Criterion::FL && alpha_ < 0.0)
            throw ContractViolation("the lemma variant of the FL correction is only set up for alpha >= 0");
    }

    DualResult run() {
        DualResult res;
        res.criterion = crit_;
        res.modes = modes_;
        res.horizon = th_;
        std::vector<double> grid = initial_grid(modes_, th_, opt_.log_points);
        Candidate best;
        std::vector<double> best_coeffs;
        std::vector<bool> eligible_hist;
        int infeasible_rounds = 0;

        for (std::size_t round = 0;; ++round) {
            if (grid.size() > opt_.max_grid) {
                double a = res.history.size() > 1 ? res.history[res.history.size() - 2] : NAN;
                double b = res.history.empty() ? NAN : res.history.back();
                std::ostringstream os;
                os << "dual refinement for " << to_string(crit_) << " exceeded " << opt_.max_grid
                   << " grid points (last values " << a << ", " << b << ")";
                throw RefinementFailure(os.str(), a, b);
            }
            auto phi = tabulate(modes_, grid);
            LpOutcome lp = solve_round(grid, phi);
            if (lp.unbounded) {
                // objective vanishes on the dual space: only the zero certificate matters
                Candidate c = zero_candidate();
                res.value = c.value;
                res.coeffs.assign(n_, 0.0);
                res.correction = c.correction;
                res.corrected = c.correction != 0.0;
                res.lp_value = c.value;
                res.history.push_back(c.value);
                res.grid_stats = {grid.size(), round};
                return res;
            }
            if (lp.infeasible) {
                if (++infeasible_rounds > 6)
                    throw NumericalFailure(std::string("discretized ") + to_string(crit_) + " dual stays unbounded");
                grid = insert_midpoints(grid);
                continue;
            }
            res.lp_value = lp.value;

            Candidate primary, cand = extract(lp.pi, grid, primary);
            res.history.push_back(cand.value);
            eligible_hist.push_back(primary.eligible);
            if (cand.value > best.value) {
                best = cand;
                best_coeffs = cand.dir;
                for (double& c : best_coeffs) c *= cand.kappa;
            }
            res.grid_stats = {grid.size(), round};

            const std::size_t r = res.history.size();
            if (r >= 3 && eligible_hist.back()) {
                double v0 = res.history[r - 1], v1 = res.history[r - 2], v2 = res.history[r - 3];
                double s = std::max(opt_.tol * std::abs(v0), abs_floor_);
                if (std::abs(v0 - v1) <= s && std::abs(v1 - v2) <= s) break;
            }

            // refine
            std::vector<double> extra;
            const std::size_t before = grid.size();
            if (dual_sign(crit_) != 0 && !primary.eligible) {
                extra = violation_points(lp.pi, primary.sign, grid);
                grid = merge_points(grid, std::move(extra), th_);
            } else {
                for (double rt : primary.check.roots) {
                    if (rt >= th_) continue;
                    auto it = std::lower_bound(grid.begin(), grid.end(), rt);
                    std::size_t k = static_cast<std::size_t>(it - grid.begin());
                    double h = (k > 0 && k < grid.size()) ? grid[k] - grid[k - 1] : th_ * 1e-6;
                    extra.push_back(rt);
                    extra.push_back(rt - 0.25 * h);
                    extra.push_back(rt + 0.25 * h);
                }
                grid = merge_points(insert_midpoints(grid), std::move(extra), th_);
            }
            if (grid.size() == before) grid = insert_midpoints(grid);
            hint_sign_ = primary.sign;
            hint_pi_ = lp.pi;
        }

        res.value = best.value;
        res.coeffs = best_coeffs;
        res.max_sign_violation = best.check.max_sign_violation;
        res.violation_bound = best.check.violation_bound;
        if (best.kappa > 0.0) {
            res.masses = {best.kappa * best.check.masses.total, best.kappa * best.check.masses.positive,
                          best.kappa * best.check.masses.negative};
        } else {
            res.max_sign_violation = 0.0;
            res.violation_bound = 0.0;
        }
        res.mass_used = res.masses.total;
        res.correction = best.correction;
        res.corrected = best.correction != 0.0;
        return res;
    }

private:
    struct LpOutcome {
        bool infeasible = false;
        bool unbounded = false;
        double value = 0.0;
        std::vector<double> pi;
    };

    double correction(const CertificateMasses& m) const {
        if (pd_.closure != Closure::C0_alpha) return 0.0;
        return compute_sharp_correction(crit_, pd_.closure, pd_.alpha, m, opt_.sharp);
    }

    bool derived() const { return opt_.sharp == SharpVariant::Derived && pd_.closure == Closure::C0_alpha; }

    Candidate zero_candidate() const {
        Candidate c;
        c.correction = correction({});
        c.value = c.correction;
        c.kappa = 0.0;
        c.eligible = true;
        return c;
    }

    LpOutcome solve_round(const std::vector<double>& grid, const std::vector<std::vector<double>>& phi) {
        const std::size_t K = grid.size();
        LinearProgram lp;
        std::vector<double> start;
        LpOutcome out;
        const int sgn = dual_sign(crit_);

        if (sgn != 0) {
            // min s  s.t.  sum_k rho_k (sgn' phi_k / S_k) + s (...) m = g
            const std::size_t T = tail_cols_.psi.size();
            for (std::size_t k = 0; k < K + T; ++k) lp.add_variable(0.0, 0.0, kInf);
            double s_lo = 0.0;
            if (derived()) {
                if (crit_ == Criterion::OS) s_lo = pos_part(-alpha_);
                if (crit_ == Criterion::POS) s_lo = pos_part(alpha_);
            }
            std::size_t s_var = lp.add_variable(-1.0, s_lo, kInf);
            for (std::size_t j = 0; j < n_; ++j) {
                std::vector<double> row(K + T + 1);
                for (std::size_t k = 0; k < K; ++k) {
                    double S = 0.0;
                    for (std::size_t i = 0; i < n_; ++i) S = std::max(S, std::abs(phi[i][k]));
                    row[k] = S > 0.0 ? -sgn * phi[j][k] / S : 0.0;
                }
                for (std::size_t k = 0; k < T; ++k) {
                    const auto& col = tail_cols_.psi[k];
                    double S = 0.0;
                    for (double v : col) S = std::max(S, std::abs(v));
                    row[K + k] = S > 0.0 ? -sgn * col[j] / S : 0.0;
                }
                row[s_var] = sgn * mass_[j];
                lp.add_row(std::move(row), RowSense::Equal, g_[j]);
            }
            auto sol = solve_lp(lp, opt_.lp);
            if (sol.status == LpStatus::Infeasible) {
                out.infeasible = true;
                return out;
            }
            if (sol.status == LpStatus::Unbounded)
                throw NumericalFailure("sign-constrained dual LP reported an unbounded minimum");
            out.value = sol.x[s_var];
            out.pi = sol.duals;
            return out;
        }

        auto w = trapezoid(grid);
        std::vector<double> hint_e;
        if (!hint_pi_.empty()) {
            hint_e.resize(K);
            for (std::size_t k = 0; k < K; ++k)
                hint_e[k] = hint_sign_ * certificate_value(modes_, hint_pi_, grid[k]);
        }
        const bool fl = crit_ == Criterion::FL;
        for (std::size_t k = 0; k < K; ++k) {
            lp.add_variable(0.0, fl ? 0.0 : -1.0, 1.0);
            double h = 0.0;
            if (!hint_e.empty()) {
                if (fl) h = hint_e[k] > 0.0 ? 1.0 : 0.0;
                else h = hint_e[k] > 0.0 ? 1.0 : (hint_e[k] < 0.0 ? -1.0 : 0.0);
            }
            start.push_back(h);
        }
        std::vector<std::size_t> zeta(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            zeta[j] = lp.add_variable(0.0, -1.0, 1.0);
            start.push_back(0.0);
        }
        std::size_t beta = 0;
        if (fl) {
            beta = lp.add_variable(0.0, 0.0, 1.0);
            start.push_back(0.0);
        }
        double cap = kInf;
        if (!fl && derived() && alpha_ != 0.0) cap = 1.0 / std::abs(alpha_);
        std::size_t sigma = lp.add_variable(1.0, 0.0, cap);
        start.push_back(0.0);

        for (std::size_t j = 0; j < n_; ++j) {
            std::vector<double> row(lp.num_vars(), 0.0);
            double total = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                row[k] = w[k] * phi[j][k];
                total += row[k];
            }
            row[zeta[j]] = tail_[j];
            if (fl) row[beta] = -total;
            row[sigma] = -g_[j];
            lp.add_row(std::move(row), RowSense::Equal, 0.0);
        }
        if (fl && alpha_ != 0.0) {
            std::vector<double> row(lp.num_vars(), 0.0);
            row[beta] = 1.0;
            row[sigma] = alpha_;
            lp.add_row(row, RowSense::LessEqual, 1.0);
            for (double& v : row) v = -v;
            lp.add_row(std::move(row), RowSense::LessEqual, 0.0);
        }
        auto sol = solve_lp(lp, opt_.lp, start);
        if (sol.status == LpStatus::Unbounded) {
            out.unbounded = true;
            return out;
        }
        if (sol.status == LpStatus::Infeasible) throw NumericalFailure("norm-ball dual LP reported infeasible");
        const double s = sol.x[sigma];
        out.value = s > 0.0 ? (fl ? 0.5 / s : 1.0 / s) : kInf;
        out.pi.assign(sol.duals.begin(), sol.duals.begin() + static_cast<std::ptrdiff_t>(n_));
        return out;
    }

    // Best of +pi and -pi at the two ends of the feasible scale range.
    Candidate extract(const std::vector<double>& pi, const std::vector<double>& grid, Candidate& primary) {
        Candidate best = zero_candidate();
        CertificateCheck chk = inspect_certificate(modes_, Criterion::MA, pi, grid, th_);
        const int sgn = dual_sign(crit_);
        primary = Candidate{};
        primary.value = -std::numeric_limits<double>::infinity();
        double primary_raw = -std::numeric_limits<double>::infinity();

        for (int s : {+1, -1}) {
            Candidate c;
            c.sign = s;
            c.check = chk;
            if (s < 0) {
                c.check.masses = {chk.masses.total, -chk.masses.negative, -chk.masses.positive};
            }
            // sign check for this orientation
            c.dir = pi;
            for (double& v : c.dir) v *= s;
            if (sgn != 0) {
                snap_asymptotic(c.dir);
                auto sc = inspect_certificate(modes_, crit_, c.dir, grid, th_);
                c.check.max_sign_violation = sc.max_sign_violation;
                c.check.violation_at = sc.violation_at;
                c.check.violation_bound = sc.violation_bound;
                c.check.masses = sc.masses;
            }
            c.eligible = sgn == 0 || c.check.max_sign_violation <= opt_.cert_tol;
            const auto& m = c.check.masses;
            double kmax = 0.0;
            if (crit_ == Criterion::FL) {
                double big = std::max(m.positive, -m.negative);
                kmax = big > 0.0 ? 0.5 / big : 0.0;
            } else {
                kmax = m.total > 0.0 ? 1.0 / m.total : 0.0;
            }
            const double gdir = dot(g_, c.dir);
            double raw = kmax * gdir;
            if (raw > primary_raw || (raw == primary_raw && c.eligible && !primary.eligible)) {
                primary_raw = raw;
                primary = c;
                primary.kappa = kmax;
            }
            if (!c.eligible || kmax == 0.0) continue;
            CertificateMasses scaled{kmax * m.total, kmax * m.positive, kmax * m.negative};
            c.correction = correction(scaled);
            c.value = kmax * gdir + c.correction;
            c.kappa = kmax;
            if (c.value > best.value) best = c;
        }
        return best;
    }

    // LP round-off can leave the slowest modes with the wrong sign at t -> inf;
    // drop them when they are that small. The result is verified afterwards.
    void snap_asymptotic(std::vector<double>& d) const {
        double big = 0.0;
        for (double v : d) big = std::max(big, std::abs(v));
        const int sgn = dual_sign(crit_);
        const auto& tc = tail_cols_;
        bool snap = false;
        for (std::size_t k = 0; k < tc.psi.size(); ++k) {
            if (std::isfinite(tc.t[k])) continue;
            double v = dot(d, tc.psi[k]);
            if (-sgn * v > 0.0 && std::abs(v) <= 1e-8 * big) snap = true;
        }
        if (!snap) return;
        for (std::size_t j = 0; j < n_; ++j)
            if (tc.slowest[j]) d[j] = 0.0;
    }

    std::vector<double> violation_points(const std::vector<double>& pi, int s, const std::vector<double>& grid) const {
        std::vector<double> d(pi);
        for (double& v : d) v *= s;
        const int sgn = dual_sign(crit_);
        std::vector<double> pts;
        double sup = 0.0;
        std::vector<std::pair<double, double>> viol;  // (t, value)
        for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
            const double a = grid[k], h = (grid[k + 1] - grid[k]) / kSubsamples;
            double best_v = 0.0, best_t = a;
            for (int q = 0; q <= kSubsamples; ++q) {
                double t = a + q * h;
                double e = certificate_value(modes_, d, t);
                sup = std::max(sup, std::abs(e));
                double v = -sgn * e;
                if (v > best_v) {
                    best_v = v;
                    best_t = t;
                }
            }
            if (best_v > 0.0) viol.emplace_back(best_t, best_v);
        }
        for (auto [t, v] : viol) {
            if (v <= opt_.cert_tol * sup * 0.01) continue;
            pts.push_back(t);
            auto it = std::lower_bound(grid.begin(), grid.end(), t);
            std::size_t k = static_cast<std::size_t>(it - grid.begin());
            if (k > 0) pts.push_back(0.5 * (grid[k - 1] + t));
            if (k < grid.size()) pts.push_back(0.5 * (grid[k] + t));
        }
        // violations beyond the horizon push the grid outwards
        if (pts.empty()) pts = insert_midpoints(grid);
        return pts;
    }

    const ProblemData& pd_;
    Criterion crit_;
    const DualOptions& opt_;
    std::vector<Mode> modes_;
    std::size_t n_ = 0;
    std::vector<double> g_, tail_, mass_;
    TailColumns tail_cols_;
    double alpha_ = 0.0;
    double th_ = 0.0;
    double abs_floor_ = 0.0;
    int hint_sign_ = 1;
    std::vector<double> hint_pi_;
};

}  // namespace

DualResult solve_dual(const ProblemData& pd, Criterion crit, const DualOptions& opt) {
    if (crit == Criterion::US && !pd.reference_nonnegative)
        throw ValidationError("negative_reference", "undershoot needs a nonnegative reference w(t) >= 0");
    if (pd.modes.empty()) {
        DualResult r;
        r.criterion = crit;
        r.value = 0.0;
        r.horizon = dual_horizon(pd, opt);
        r.history = {0.0};
        return r;
    }
    DualSolver s(pd, crit, opt);
    return s.run();
}

}  // namespace perflim
