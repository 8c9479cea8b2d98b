#include "perflim/ratfun.hpp"

#include "perflim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

namespace perflim {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

cplx horner(const std::vector<cplx>& a, cplx s) {
    cplx v = 0.0;
    for (auto it = a.rbegin(); it != a.rend(); ++it) v = v * s + *it;
    return v;
}

// value and derivative together
std::pair<cplx, cplx> horner2(const std::vector<cplx>& a, cplx s) {
    cplx v = 0.0, d = 0.0;
    for (auto it = a.rbegin(); it != a.rend(); ++it) {
        d = d * s + v;
        v = v * s + *it;
    }
    return {v, d};
}

double abs_horner(const std::vector<cplx>& a, double r) {
    double v = 0.0;
    for (auto it = a.rbegin(); it != a.rend(); ++it) v = v * r + std::abs(*it);
    return v;
}

bool aberth(const std::vector<cplx>& a, std::vector<cplx>& z, int max_iter) {
    const std::size_t n = z.size();
    std::vector<bool> done(n, false);
    std::size_t remaining = n;
    for (int it = 0; it < max_iter && remaining > 0; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            if (done[i]) continue;
            auto [p, dp] = horner2(a, z[i]);
            const double floor = 16.0 * kEps * abs_horner(a, std::abs(z[i]));
            if (std::abs(p) <= floor) {
                done[i] = true;
                --remaining;
                continue;
            }
            cplx ratio = p / dp;
            cplx s = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) s += 1.0 / (z[i] - z[j]);
            cplx w = ratio / (1.0 - ratio * s);
            if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) return false;
            z[i] -= w;
            if (std::abs(w) <= 2.0 * kEps * std::abs(z[i])) {
                done[i] = true;
                --remaining;
            }
        }
    }
    return remaining == 0;
}

struct Cluster {
    cplx sum = 0.0;
    int count = 0;
    cplx mean() const { return sum / static_cast<double>(count); }
};

bool close_rel(cplx a, cplx b, double tol) {
    double scale = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) <= tol * scale;
}

}  // namespace

// ---------------------------------------------------------------- Poly

Poly::Poly() : c_{0.0} {}

Poly::Poly(std::vector<double> coeffs) : c_(std::move(coeffs)) {
    if (c_.empty()) throw ValidationError("empty_polynomial", "coefficient list is empty");
    for (double v : c_)
        if (!std::isfinite(v))
            throw ValidationError("nonfinite_coefficient", "polynomial coefficient is not finite");
    trim();
}

Poly::Poly(std::initializer_list<double> coeffs) : Poly(std::vector<double>(coeffs)) {}

void Poly::trim() {
    while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
}

Poly Poly::from_roots(std::span<const cplx> roots, double lead) {
    std::vector<cplx> acc{cplx(lead)};
    for (cplx r : roots) {
        std::vector<cplx> next(acc.size() + 1, 0.0);
        for (std::size_t k = 0; k < acc.size(); ++k) {
            next[k + 1] += acc[k];
            next[k] -= r * acc[k];
        }
        acc = std::move(next);
    }
    std::vector<double> c(acc.size());
    for (std::size_t k = 0; k < acc.size(); ++k) c[k] = acc[k].real();
    return Poly(std::move(c));
}

double Poly::operator()(double s) const {
    double v = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) v = v * s + *it;
    return v;
}

cplx Poly::operator()(cplx s) const {
    cplx v = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) v = v * s + *it;
    return v;
}

Poly Poly::derivative() const {
    if (c_.size() == 1) return Poly{0.0};
    std::vector<double> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
    return Poly(std::move(d));
}

Poly operator*(const Poly& a, const Poly& b) {
    std::vector<double> c(a.c_.size() + b.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
        for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    return Poly(std::move(c));
}

// ---------------------------------------------------------------- roots

std::vector<Root> poly_roots(const Poly& p, const RootOptions& opt) {
    if (p.degree() < 1)
        throw ValidationError("constant_polynomial", "root finding needs degree >= 1");

    const auto& c = p.coeffs();
    std::size_t zeros = 0;
    while (c[zeros] == 0.0) ++zeros;

    std::vector<cplx> a;
    const double lead = c.back();
    for (std::size_t k = zeros; k < c.size(); ++k) a.emplace_back(c[k] / lead);
    const std::size_t n = a.size() - 1;

    std::vector<cplx> z;
    if (n == 1) {
        z.push_back(-a[0]);
    } else if (n > 1) {
        std::mt19937_64 rng(opt.seed);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        // geometric mean of root moduli sets the starting circle
        const double radius = std::pow(std::abs(a[0]), 1.0 / static_cast<double>(n));
        bool ok = false;
        for (int attempt = 0; attempt <= opt.max_restarts && !ok; ++attempt) {
            const double offset = 2.0 * std::numbers::pi * unif(rng);
            const double r = radius * (attempt == 0 ? 1.0 : 0.5 + unif(rng));
            z.assign(n, 0.0);
            for (std::size_t k = 0; k < n; ++k) {
                double ang = offset + 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
                z[k] = std::polar(r, ang + 0.3 / static_cast<double>(n));
            }
            ok = aberth(a, z, opt.max_iter);
        }
        if (!ok) {
            std::ostringstream os;
            os << "root iteration did not converge for degree " << n;
            throw NumericalFailure(os.str(), {"restarts=" + std::to_string(opt.max_restarts)});
        }
        // Newton polish; keep only steps that shrink the residual.
        for (cplx& r : z) {
            for (int k = 0; k < 3; ++k) {
                auto [v, d] = horner2(a, r);
                if (d == 0.0) break;
                cplx cand = r - v / d;
                if (std::abs(horner(a, cand)) < std::abs(v)) r = cand;
                else break;
            }
        }
    }

    // merge clusters
    std::vector<Cluster> clusters;
    for (cplx r : z) {
        bool merged = false;
        for (auto& cl : clusters) {
            if (close_rel(cl.mean(), r, opt.merge_tol)) {
                cl.sum += r;
                ++cl.count;
                merged = true;
                break;
            }
        }
        if (!merged) clusters.push_back({r, 1});
    }

    // Multiple roots come out spread over ~eps^(1/m); merge nearby clusters
    // while the polynomial stays negligible at the merged centroid.
    auto rel_residual = [&a](cplx x) {
        double scale = 0.0, pw = 1.0;
        for (const auto& ak : a) {
            scale += std::abs(ak) * pw;
            pw *= std::abs(x);
        }
        return std::abs(horner(a, x)) / scale;
    };
    for (bool again = true; again && clusters.size() > 1;) {
        again = false;
        std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
        for (std::size_t i = 0; i < clusters.size(); ++i)
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                double d = std::abs(clusters[i].mean() - clusters[j].mean());
                if (d <= 1e-2 * std::max(1.0, std::abs(clusters[i].mean()))) pairs.emplace_back(d, i, j);
            }
        std::sort(pairs.begin(), pairs.end());
        for (auto [d, i, j] : pairs) {
            Cluster merged{clusters[i].sum + clusters[j].sum, clusters[i].count + clusters[j].count};
            if (rel_residual(merged.mean()) <= 1e-14) {
                clusters[i] = merged;
                clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(j));
                again = true;
                break;
            }
        }
    }

    // A cluster of m roots is a simple root of the (m-1)-th derivative.
    for (auto& cl : clusters) {
        if (cl.count < 2) continue;
        std::vector<cplx> q = a;
        for (int k = 0; k < cl.count - 1; ++k) {
            for (std::size_t i = 1; i < q.size(); ++i) q[i - 1] = q[i] * static_cast<double>(i);
            q.pop_back();
        }
        cplx x = cl.mean();
        for (int it = 0; it < 8; ++it) {
            auto [v, d] = horner2(q, x);
            if (d == 0.0) break;
            cplx cand = x - v / d;
            if (std::abs(horner(q, cand)) < std::abs(v)) x = cand;
            else break;
        }
        cl.sum = x * static_cast<double>(cl.count);
    }

    std::vector<Root> real, upper, lower;
    for (const auto& cl : clusters) {
        cplx m = cl.mean();
        if (std::abs(m.imag()) <= opt.merge_tol * std::abs(m)) {
            real.push_back({cplx(m.real(), 0.0), cl.count});
        } else if (m.imag() > 0) {
            upper.push_back({m, cl.count});
        } else {
            lower.push_back({m, cl.count});
        }
    }
    if (upper.size() != lower.size())
        throw NumericalFailure("complex roots do not pair into conjugates");

    std::vector<Root> out;
    if (zeros > 0) out.push_back({cplx(0.0, 0.0), static_cast<int>(zeros)});
    std::sort(real.begin(), real.end(),
              [](const Root& x, const Root& y) { return x.value.real() < y.value.real(); });
    out.insert(out.end(), real.begin(), real.end());

    std::vector<bool> used(lower.size(), false);
    std::sort(upper.begin(), upper.end(), [](const Root& x, const Root& y) {
        if (x.value.real() != y.value.real()) return x.value.real() < y.value.real();
        return x.value.imag() < y.value.imag();
    });
    for (const auto& u : upper) {
        std::size_t best = lower.size();
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < lower.size(); ++j) {
            if (used[j]) continue;
            double d = std::abs(std::conj(lower[j].value) - u.value);
            if (d < bd) {
                bd = d;
                best = j;
            }
        }
        used[best] = true;
        cplx avg = 0.5 * (u.value + std::conj(lower[best].value));
        int mult = std::max(u.multiplicity, lower[best].multiplicity);
        out.push_back({avg, mult});
        out.push_back({std::conj(avg), mult});
    }
    return out;
}

// ---------------------------------------------------------------- RatFun

cplx rat_eval(const RatFun& r, cplx s, double tol) {
    cplx d = r.den.operator()(s);
    double scale = 0.0;
    const auto& dc = r.den.coeffs();
    for (auto it = dc.rbegin(); it != dc.rend(); ++it) scale = scale * std::abs(s) + std::abs(*it);
    if (std::abs(d) <= tol * scale) {
        std::ostringstream os;
        os << "evaluation point " << s << " is a pole";
        throw PoleProximityError(os.str());
    }
    return r.num.operator()(s) / d;
}

int relative_degree(const RatFun& r) {
    if (r.den.is_zero()) throw ValidationError("zero_denominator", "denominator is the zero polynomial");
    if (r.num.is_zero()) return std::numeric_limits<int>::max();
    int rd = r.den.degree() - r.num.degree();
    if (rd < 0) throw ValidationError("improper", "numerator degree exceeds denominator degree");
    return rd;
}

namespace {

// Taylor coefficients of poly at p up to order `order` (inclusive).
std::vector<cplx> taylor_at(const Poly& poly, cplx p, int order) {
    std::vector<cplx> c(poly.coeffs().begin(), poly.coeffs().end());
    std::vector<cplx> out;
    for (int k = 0; k <= order && !c.empty(); ++k) {
        // synthetic division by (s - p): remainder is the value
        std::vector<cplx> q(c.size() > 1 ? c.size() - 1 : 0);
        cplx acc = 0.0;
        for (std::size_t i = c.size(); i-- > 0;) {
            acc = acc * p + c[i];
            if (i > 0) q[i - 1] = acc;
        }
        out.push_back(acc);
        c = std::move(q);
    }
    out.resize(static_cast<std::size_t>(order) + 1, 0.0);
    return out;
}

std::vector<cplx> series_mul(const std::vector<cplx>& a, const std::vector<cplx>& b, std::size_t n) {
    std::vector<cplx> c(n, 0.0);
    for (std::size_t i = 0; i < n && i < a.size(); ++i)
        for (std::size_t j = 0; i + j < n && j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

std::vector<cplx> series_div(const std::vector<cplx>& a, const std::vector<cplx>& b, std::size_t n) {
    std::vector<cplx> q(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc = k < a.size() ? a[k] : 0.0;
        for (std::size_t j = 1; j <= k && j < b.size(); ++j) acc -= b[j] * q[k - j];
        q[k] = acc / b[0];
    }
    return q;
}

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

}  // namespace

std::vector<PFTerm> partial_fractions(const RatFun& r, const RootOptions& opt) {
    if (r.num.is_zero()) return {};
    if (r.num.degree() >= r.den.degree())
        throw ValidationError("not_strictly_proper", "partial fractions need deg(num) < deg(den)");

    auto roots = poly_roots(r.den, opt);
    for (std::size_t i = 0; i < roots.size(); ++i)
        for (std::size_t j = i + 1; j < roots.size(); ++j)
            if (std::abs(roots[i].value - roots[j].value) <=
                1e-6 * std::max({std::abs(roots[i].value), std::abs(roots[j].value), 1e-300})) {
                std::ostringstream os;
                os << "poles " << roots[i].value << " and " << roots[j].value << " are too close";
                throw IllConditionedError(os.str());
            }

    std::vector<PFTerm> terms;
    for (std::size_t i = 0; i < roots.size(); ++i) {
        const cplx p = roots[i].value;
        if (p.imag() < 0.0) continue;  // filled from the conjugate partner
        const int m = roots[i].multiplicity;
        const std::size_t n = static_cast<std::size_t>(m);

        std::vector<cplx> num = taylor_at(r.num, p, m - 1);
        std::vector<cplx> den{cplx(r.den.lead())};
        den.resize(n, 0.0);
        for (std::size_t j = 0; j < roots.size(); ++j) {
            if (j == i) continue;
            std::vector<cplx> f{p - roots[j].value, 1.0};
            for (int k = 0; k < roots[j].multiplicity; ++k) den = series_mul(den, f, n);
        }
        std::vector<cplx> f = series_div(num, den, n);
        for (int idx = 0; idx < m; ++idx) {
            int k = m - idx - 1;
            cplx c = f[static_cast<std::size_t>(idx)] / factorial(k);
            if (p.imag() == 0.0) {
                terms.push_back({p, k, cplx(c.real(), 0.0)});
            } else {
                terms.push_back({p, k, c});
                terms.push_back({std::conj(p), k, std::conj(c)});
            }
        }
    }
    return terms;
}

double time_eval(std::span<const PFTerm> terms, double t) {
    double v = 0.0;
    for (const auto& term : terms) {
        cplx e = term.coeff * std::exp(term.pole * t);
        if (term.k > 0) e *= std::pow(t, term.k);
        v += e.real();
    }
    return v;
}

double time_derivative(std::span<const PFTerm> terms, double t, int order) {
    if (order == 0) return time_eval(terms, t);
    double v = 0.0;
    for (const auto& term : terms) {
        cplx acc = 0.0;
        double binom = 1.0;  // C(order, i)
        double falling = 1.0;  // k!/(k-i)!
        for (int i = 0; i <= std::min(order, term.k); ++i) {
            if (i > 0) {
                binom = binom * (order - i + 1) / i;
                falling *= (term.k - i + 1);
            }
            cplx tp = (term.k - i == 0) ? cplx(1.0) : cplx(std::pow(t, term.k - i));
            acc += binom * falling * tp * std::pow(term.pole, order - i);
        }
        v += (term.coeff * acc * std::exp(term.pole * t)).real();
    }
    return v;
}

// ---------------------------------------------------------------- modes

double mode_mass(double x, double y, ModeKind kind) {
    if (!(x > 0.0)) throw ValidationError("nonpositive_decay", "mode decay rate must be positive");
    const double r2 = x * x + y * y;
    return (kind == ModeKind::Cos ? x : y) / r2;
}

double mode_value(double x, double y, ModeKind kind, double t) {
    const double e = std::exp(-x * t);
    if (y == 0.0) return kind == ModeKind::Cos ? e : 0.0;
    return e * (kind == ModeKind::Cos ? std::cos(y * t) : std::sin(y * t));
}

double mode_antiderivative(double x, double y, ModeKind kind, double t) {
    const double e = std::exp(-x * t);
    if (e == 0.0) return 0.0;
    const double r2 = x * x + y * y;
    const double c = std::cos(y * t), s = std::sin(y * t);
    if (kind == ModeKind::Cos) return e * (-x * c + y * s) / r2;
    return e * (-x * s - y * c) / r2;
}

namespace {

// (e^z - 1 - z)/z^2 and (e^z(z-1) + 1)/z^2
std::pair<cplx, cplx> hat_kernels(cplx z) {
    if (std::abs(z) < 0.5) {
        cplx ea = 0.0, eb = 0.0, zk = 1.0;
        double fact = 2.0;  // (k+2)!
        for (int k = 0; k < 24; ++k) {
            ea += zk / fact;
            eb += zk * static_cast<double>(k + 1) / fact;
            zk *= z;
            fact *= (k + 3);
        }
        return {ea, eb};
    }
    cplx ez = std::exp(z);
    cplx z2 = z * z;
    return {(ez - 1.0 - z) / z2, (ez * (z - 1.0) + 1.0) / z2};
}

}  // namespace

SegmentWeights segment_weights(double x, double y, ModeKind kind, double a, double b) {
    const double h = b - a;
    if (!(h > 0.0)) throw ValidationError("bad_grid", "segment must have positive length");
    const cplx lam(-x, y);
    const cplx scale = h * std::exp(lam * a);
    if (scale == 0.0) return {0.0, 0.0};
    auto [ea, eb] = hat_kernels(lam * h);
    cplx wa = scale * ea, wb = scale * eb;
    if (kind == ModeKind::Cos) return {wa.real(), wb.real()};
    return {wa.imag(), wb.imag()};
}

}  // namespace perflim
