#include "perflim/lp.hpp"

#include "perflim/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace perflim {

std::size_t LinearProgram::add_variable(double c, double lo, double hi) {
    cost.push_back(c);
    lower.push_back(lo);
    upper.push_back(hi);
    for (auto& r : rows) r.push_back(0.0);
    return cost.size() - 1;
}

std::size_t LinearProgram::add_row(std::vector<double> coeffs, RowSense s, double b) {
    if (coeffs.size() != num_vars())
        throw std::invalid_argument("row length does not match the number of variables");
    rows.push_back(std::move(coeffs));
    sense.push_back(s);
    rhs.push_back(b);
    return rows.size() - 1;
}

const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
    }
    return "?";
}

namespace {

// Between: nonbasic at a value strictly inside its bounds (or free).
enum class VarState { Basic, AtLower, AtUpper, Between };

class Simplex {
public:
    Simplex(const LinearProgram& lp, const LpOptions& opt, std::span<const double> start)
        : lp_(lp), opt_(opt), start_(start) {
        n_ = lp.num_vars();
        m_ = lp.num_rows();
        for (const auto& r : lp.rows)
            if (r.size() != n_) throw std::invalid_argument("ragged constraint matrix");
        max_iter_ = opt.max_iter ? opt.max_iter : 50 * (m_ + n_) + 1000;
        setup();
    }

    LpSolution run() {
        LpSolution sol;
        if (nart_ > 0) {
            std::vector<double> c1(total(), 0.0);
            for (std::size_t k = 0; k < nart_; ++k) c1[n_ + m_ + k] = 1.0;
            cost_ = c1;
            iterate(/*phase1=*/true);
            refactor();
            double infeas = 0.0;
            for (std::size_t k = 0; k < nart_; ++k) infeas += std::abs(x_[n_ + m_ + k]);
            double scale = 1.0;
            for (double b : lp_.rhs) scale = std::max(scale, std::abs(b));
            if (infeas > opt_.feas_tol * scale * 10.0) {
                sol.status = LpStatus::Infeasible;
                sol.iterations = iter_;
                return sol;
            }
            for (std::size_t k = 0; k < nart_; ++k) {
                std::size_t j = n_ + m_ + k;
                lo_[j] = hi_[j] = 0.0;
                if (state_[j] != VarState::Basic) {
                    state_[j] = VarState::AtLower;
                    x_[j] = 0.0;
                }
            }
            refactor();
        }
        cost_.assign(total(), 0.0);
        for (std::size_t j = 0; j < n_; ++j) cost_[j] = -lp_.cost[j];
        bool bounded = iterate(/*phase1=*/false);
        refactor();
        sol.iterations = iter_;
        if (!bounded) {
            sol.status = LpStatus::Unbounded;
            return sol;
        }
        sol.status = LpStatus::Optimal;
        sol.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
        for (std::size_t j = 0; j < n_; ++j) sol.x[j] = std::clamp(sol.x[j], lp_.lower[j], lp_.upper[j]);
        sol.objective = 0.0;
        for (std::size_t j = 0; j < n_; ++j) sol.objective += lp_.cost[j] * sol.x[j];
        Eigen::VectorXd y = duals_min();
        sol.duals.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) sol.duals[i] = -y(static_cast<Eigen::Index>(i));
        return sol;
    }

private:
    std::size_t total() const { return n_ + m_ + nart_; }

    void column(std::size_t j, Eigen::VectorXd& a) const {
        a.setZero(static_cast<Eigen::Index>(m_));
        if (j < n_) {
            for (std::size_t i = 0; i < m_; ++i) a(static_cast<Eigen::Index>(i)) = lp_.rows[i][j];
        } else if (j < n_ + m_) {
            a(static_cast<Eigen::Index>(j - n_)) = 1.0;
        } else {
            std::size_t k = j - n_ - m_;
            a(static_cast<Eigen::Index>(art_row_[k])) = art_sign_[k];
        }
    }

    void setup() {
        x_.assign(n_ + m_, 0.0);
        lo_.assign(n_ + m_, 0.0);
        hi_.assign(n_ + m_, 0.0);
        state_.assign(n_ + m_, VarState::AtLower);
        col_scale_.assign(n_ + m_, 1.0);
        for (std::size_t j = 0; j < n_; ++j) {
            lo_[j] = lp_.lower[j];
            hi_[j] = lp_.upper[j];
            if (lo_[j] > hi_[j]) throw std::invalid_argument("variable bounds cross");
            if (j < start_.size() && std::isfinite(start_[j])) {
                x_[j] = std::clamp(start_[j], lo_[j], hi_[j]);
                state_[j] = x_[j] == lo_[j]   ? VarState::AtLower
                            : x_[j] == hi_[j] ? VarState::AtUpper
                                              : VarState::Between;
            } else if (std::isfinite(lo_[j])) {
                x_[j] = lo_[j];
                state_[j] = VarState::AtLower;
            } else if (std::isfinite(hi_[j])) {
                x_[j] = hi_[j];
                state_[j] = VarState::AtUpper;
            } else {
                x_[j] = 0.0;
                state_[j] = VarState::Between;
            }
            double s = 1.0;
            for (std::size_t i = 0; i < m_; ++i) s += lp_.rows[i][j] * lp_.rows[i][j];
            col_scale_[j] = std::sqrt(s);
        }
        head_.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            double r = lp_.rhs[i];
            for (std::size_t j = 0; j < n_; ++j)
                if (x_[j] != 0.0) r -= lp_.rows[i][j] * x_[j];
            std::size_t s = n_ + i;
            switch (lp_.sense[i]) {
                case RowSense::LessEqual: lo_[s] = 0.0; hi_[s] = kInf; break;
                case RowSense::Equal: lo_[s] = 0.0; hi_[s] = 0.0; break;
                case RowSense::GreaterEqual: lo_[s] = -kInf; hi_[s] = 0.0; break;
            }
            if (r >= lo_[s] && r <= hi_[s]) {
                x_[s] = r;
                state_[s] = VarState::Basic;
                head_[i] = s;
            } else {
                x_[s] = 0.0;
                state_[s] = std::isfinite(lo_[s]) ? VarState::AtLower : VarState::AtUpper;
                std::size_t a = n_ + m_ + nart_;
                art_row_.push_back(i);
                art_sign_.push_back(r >= 0.0 ? 1.0 : -1.0);
                x_.push_back(std::abs(r));
                lo_.push_back(0.0);
                hi_.push_back(kInf);
                state_.push_back(VarState::Basic);
                col_scale_.push_back(1.0);
                head_[i] = a;
                ++nart_;
            }
        }
        binv_ = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
        for (std::size_t i = 0; i < m_; ++i) {
            std::size_t j = head_[i];
            if (j >= n_ + m_) binv_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = art_sign_[j - n_ - m_];
        }
    }

    Eigen::VectorXd duals_min() const {
        Eigen::VectorXd cb(static_cast<Eigen::Index>(m_));
        for (std::size_t i = 0; i < m_; ++i) cb(static_cast<Eigen::Index>(i)) = cost_[head_[i]];
        return binv_.transpose() * cb;
    }

    void refactor() {
        if (m_ == 0) return;
        const auto M = static_cast<Eigen::Index>(m_);
        Eigen::MatrixXd B(M, M);
        Eigen::VectorXd a;
        for (std::size_t i = 0; i < m_; ++i) {
            column(head_[i], a);
            B.col(static_cast<Eigen::Index>(i)) = a;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
        if (!lu.isInvertible()) throw NumericalFailure("simplex basis became singular", trace_vec());
        binv_ = lu.inverse();
        // x_B = B^{-1} (b - N x_N)
        Eigen::VectorXd r(M);
        for (std::size_t i = 0; i < m_; ++i) r(static_cast<Eigen::Index>(i)) = lp_.rhs[i];
        for (std::size_t j = 0; j < total(); ++j) {
            if (state_[j] == VarState::Basic || x_[j] == 0.0) continue;
            column(j, a);
            r -= x_[j] * a;
        }
        Eigen::VectorXd xb = binv_ * r;
        for (std::size_t i = 0; i < m_; ++i) x_[head_[i]] = xb(static_cast<Eigen::Index>(i));
        since_refactor_ = 0;
    }

    std::vector<std::string> trace_vec() const { return {trace_.begin(), trace_.end()}; }

    // returns false when unbounded
    bool iterate(bool phase1) {
        bool bland = false;
        int degenerate = 0;
        std::vector<double> d(total());
        Eigen::VectorXd a, alpha;
        for (;;) {
            if (iter_ >= max_iter_) {
                std::ostringstream os;
                os << "simplex iteration limit " << max_iter_ << " reached (phase " << (phase1 ? 1 : 2) << ")";
                throw NumericalFailure(os.str(), trace_vec());
            }
            if (since_refactor_ >= opt_.refactor_every) refactor();

            // pricing
            Eigen::VectorXd y = duals_min();
            for (std::size_t j = 0; j < n_; ++j) d[j] = cost_[j];
            for (std::size_t i = 0; i < m_; ++i) {
                const double yi = y(static_cast<Eigen::Index>(i));
                if (yi == 0.0) continue;
                const double* row = lp_.rows[i].data();
                for (std::size_t j = 0; j < n_; ++j) d[j] -= yi * row[j];
            }
            for (std::size_t i = 0; i < m_; ++i) d[n_ + i] = cost_[n_ + i] - y(static_cast<Eigen::Index>(i));
            for (std::size_t k = 0; k < nart_; ++k)
                d[n_ + m_ + k] = cost_[n_ + m_ + k] - art_sign_[k] * y(static_cast<Eigen::Index>(art_row_[k]));

            std::size_t q = total();
            double best = 0.0;
            int dir = 0;
            for (std::size_t j = 0; j < total(); ++j) {
                int cand = 0;
                switch (state_[j]) {
                    case VarState::Basic: continue;
                    case VarState::AtLower:
                        if (hi_[j] > lo_[j] && d[j] < -opt_.opt_tol) cand = +1;
                        break;
                    case VarState::AtUpper:
                        if (hi_[j] > lo_[j] && d[j] > opt_.opt_tol) cand = -1;
                        break;
                    case VarState::Between:
                        if (std::abs(d[j]) > opt_.opt_tol) cand = d[j] < 0 ? +1 : -1;
                        break;
                }
                if (cand == 0) continue;
                if (bland) {
                    q = j;
                    dir = cand;
                    break;
                }
                double score = std::abs(d[j]) / col_scale_[j];
                if (score > best) {
                    best = score;
                    q = j;
                    dir = cand;
                }
            }
            if (q == total()) return true;  // optimal

            column(q, a);
            alpha = binv_ * a;
            const double ptol = std::max(opt_.pivot_tol, 1e-11 * alpha.lpNorm<Eigen::Infinity>());

            // Harris ratio test
            double theta_max = kInf;
            for (std::size_t i = 0; i < m_; ++i) {
                double ai = dir * alpha(static_cast<Eigen::Index>(i));
                std::size_t b = head_[i];
                if (ai > ptol && std::isfinite(lo_[b]))
                    theta_max = std::min(theta_max, (x_[b] - lo_[b] + opt_.feas_tol) / ai);
                else if (ai < -ptol && std::isfinite(hi_[b]))
                    theta_max = std::min(theta_max, (hi_[b] - x_[b] + opt_.feas_tol) / -ai);
            }
            std::size_t r = m_;
            double theta = kInf;
            double piv = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                double ai = dir * alpha(static_cast<Eigen::Index>(i));
                std::size_t b = head_[i];
                double ratio;
                if (ai > ptol && std::isfinite(lo_[b]))
                    ratio = (x_[b] - lo_[b]) / ai;
                else if (ai < -ptol && std::isfinite(hi_[b]))
                    ratio = (hi_[b] - x_[b]) / -ai;
                else
                    continue;
                if (ratio > theta_max) continue;
                bool take;
                if (bland)
                    take = (r == m_) || head_[i] < head_[r];
                else
                    take = std::abs(ai) > piv;
                if (take) {
                    r = i;
                    piv = std::abs(ai);
                    theta = std::max(ratio, 0.0);
                }
            }
            double flip = dir > 0 ? hi_[q] - x_[q] : x_[q] - lo_[q];
            bool do_flip = std::isfinite(flip) && flip <= theta;
            if (do_flip) theta = flip;
            if (!std::isfinite(theta)) {
                if (phase1) throw NumericalFailure("phase one ray found", trace_vec());
                return false;
            }

            ++iter_;
            if (theta <= 1e-12) {
                if (++degenerate > opt_.bland_after) bland = true;
            } else {
                degenerate = 0;
                bland = false;
            }

            for (std::size_t i = 0; i < m_; ++i) x_[head_[i]] -= dir * theta * alpha(static_cast<Eigen::Index>(i));
            x_[q] += dir * theta;

            std::ostringstream os;
            if (do_flip) {
                state_[q] = dir > 0 ? VarState::AtUpper : VarState::AtLower;
                x_[q] = dir > 0 ? hi_[q] : lo_[q];
                os << "it " << iter_ << " flip " << q;
            } else {
                std::size_t leave = head_[r];
                double ar = dir * alpha(static_cast<Eigen::Index>(r));
                if (ar > 0) {
                    x_[leave] = lo_[leave];
                    state_[leave] = VarState::AtLower;
                } else {
                    x_[leave] = hi_[leave];
                    state_[leave] = VarState::AtUpper;
                }
                state_[q] = VarState::Basic;
                head_[r] = q;
                const auto R = static_cast<Eigen::Index>(r);
                const double pr = alpha(R);
                binv_.row(R) /= pr;
                for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m_); ++i)
                    if (i != R && alpha(i) != 0.0) binv_.row(i) -= alpha(i) * binv_.row(R);
                ++since_refactor_;
                os << "it " << iter_ << " enter " << q << " leave " << leave << " theta " << theta
                   << (bland ? " bland" : "");
            }
            trace_.push_back(os.str());
            if (trace_.size() > 40) trace_.pop_front();
        }
    }

    const LinearProgram& lp_;
    const LpOptions& opt_;
    std::span<const double> start_;
    std::size_t n_ = 0, m_ = 0, nart_ = 0;
    std::size_t max_iter_ = 0;
    std::size_t iter_ = 0;
    int since_refactor_ = 0;
    std::vector<double> x_, lo_, hi_, cost_, col_scale_;
    std::vector<VarState> state_;
    std::vector<std::size_t> head_;
    std::vector<std::size_t> art_row_;
    std::vector<double> art_sign_;
    Eigen::MatrixXd binv_;
    std::deque<std::string> trace_;
};

void fill_residuals(const LinearProgram& lp, LpSolution& sol) {
    const std::size_t m = lp.num_rows(), n = lp.num_vars();
    double pr = 0.0, cs = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double ax = 0.0;
        for (std::size_t j = 0; j < n; ++j) ax += lp.rows[i][j] * sol.x[j];
        double slack = lp.rhs[i] - ax;
        double viol = 0.0;
        switch (lp.sense[i]) {
            case RowSense::LessEqual: viol = std::max(0.0, -slack); break;
            case RowSense::Equal: viol = std::abs(slack); break;
            case RowSense::GreaterEqual: viol = std::max(0.0, slack); break;
        }
        pr = std::max(pr, viol);
        if (lp.sense[i] != RowSense::Equal) cs = std::max(cs, std::abs(sol.duals[i] * slack));
    }
    sol.primal_residual = pr;
    sol.complementarity_residual = cs;
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opt, std::span<const double> start) {
    if (lp.lower.size() != lp.num_vars() || lp.upper.size() != lp.num_vars() ||
        lp.sense.size() != lp.num_rows() || lp.rhs.size() != lp.num_rows())
        throw std::invalid_argument("inconsistent linear program dimensions");
    // equilibrate rows; multipliers scale back by the same factors
    LinearProgram scaled = lp;
    std::vector<double> factor(lp.num_rows(), 1.0);
    for (std::size_t i = 0; i < lp.num_rows(); ++i) {
        double big = 0.0;
        for (double a : lp.rows[i]) big = std::max(big, std::abs(a));
        if (big > 0.0) {
            factor[i] = 1.0 / big;
            for (double& a : scaled.rows[i]) a *= factor[i];
            scaled.rhs[i] *= factor[i];
        }
    }
    // columns too: x_j = colf[j] * x'_j
    std::vector<double> colf(lp.num_vars(), 1.0);
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
        double big = 0.0;
        for (const auto& r : scaled.rows) big = std::max(big, std::abs(r[j]));
        if (big > 0.0) colf[j] = 1.0 / big;
        for (auto& r : scaled.rows) r[j] *= colf[j];
        scaled.cost[j] *= colf[j];
        scaled.lower[j] /= colf[j];
        scaled.upper[j] /= colf[j];
    }
    std::vector<double> st(start.begin(), start.end());
    for (std::size_t j = 0; j < st.size() && j < colf.size(); ++j) st[j] /= colf[j];
    Simplex s(scaled, opt, st);
    LpSolution sol = s.run();
    if (sol.status == LpStatus::Optimal) {
        for (std::size_t j = 0; j < lp.num_vars(); ++j) sol.x[j] *= colf[j];
        for (std::size_t i = 0; i < lp.num_rows(); ++i) sol.duals[i] *= factor[i];
        fill_residuals(lp, sol);
    }
    return sol;
}

double dual_objective(const LinearProgram& lp, std::span<const double> y, double tol) {
    double v = 0.0;
    for (std::size_t i = 0; i < lp.num_rows(); ++i) v += lp.rhs[i] * y[i];
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
        double d = lp.cost[j];
        for (std::size_t i = 0; i < lp.num_rows(); ++i) d -= lp.rows[i][j] * y[i];
        if (std::abs(d) <= tol) continue;
        double bound = d > 0 ? lp.upper[j] : lp.lower[j];
        if (!std::isfinite(bound)) return kInf;
        v += d * bound;
    }
    return v;
}

}  // namespace perflim
