#include "perflim/setup.hpp"

#include "perflim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace perflim {

namespace {

constexpr double kAxisTol = 1e-8;
constexpr double kDistinctTol = 1e-7;

bool on_axis(cplx r) { return std::abs(r.real()) < kAxisTol * (1.0 + std::abs(r)); }

std::string fmt(cplx r) {
    std::ostringstream os;
    os << r.real() << (r.imag() < 0 ? "-" : "+") << std::abs(r.imag()) << "i";
    return os.str();
}

bool coincide(cplx a, cplx b) {
    return std::abs(a - b) <= kDistinctTol * std::max({std::abs(a), std::abs(b), 1e-300});
}

std::vector<cplx> reduce_conjugates(const std::vector<cplx>& pts) {
    std::vector<cplx> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        cplx p = pts[i];
        if (p.imag() < 0.0) {
            bool partner = false;
            for (std::size_t j = 0; j < pts.size(); ++j)
                if (j != i && pts[j].imag() > 0.0 && coincide(pts[j], std::conj(p))) partner = true;
            if (partner) continue;
            p = std::conj(p);
        }
        out.push_back(p);
    }
    return out;
}

void append_modes(std::vector<Mode>& modes, const std::vector<cplx>& pts, Subspace sub) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
        cplx p = pts[i];
        if (on_axis(p) || p.real() <= 0.0)
            throw ValidationError("imaginary_axis_point",
                                  "interpolation point " + fmt(p) + " is not in the open right half-plane");
        int src = static_cast<int>(i);
        if (p.imag() == 0.0) {
            modes.push_back({p.real(), 0.0, ModeKind::Cos, sub, src});
        } else {
            modes.push_back({p.real(), p.imag(), ModeKind::Cos, sub, src});
            modes.push_back({p.real(), p.imag(), ModeKind::Sin, sub, src});
        }
    }
}

std::vector<double> eval_entries(const RatFun& w_hat, const std::vector<cplx>& pts) {
    std::vector<double> out;
    for (cplx p : pts) {
        cplx v;
        try {
            v = rat_eval(w_hat, p, 1e-10);
        } catch (const PoleProximityError&) {
            throw ValidationError("reference_pole_at_interpolation_point",
                                  "reference has a pole at " + fmt(p));
        }
        out.push_back(v.real());
        if (p.imag() != 0.0) out.push_back(-v.imag());
    }
    return out;
}

// RHP members of a root list, conjugate-reduced, after axis and simplicity checks.
std::vector<cplx> rhp_points(const std::vector<Root>& roots, const char* axis_code,
                             const char* repeat_code) {
    std::vector<cplx> out;
    for (const auto& r : roots) {
        if (on_axis(r.value))
            throw ValidationError(axis_code, "point " + fmt(r.value) + " lies on the imaginary axis");
        if (r.value.real() > 0.0) {
            if (r.multiplicity > 1)
                throw ValidationError(repeat_code, "point " + fmt(r.value) + " is not simple");
            if (r.value.imag() >= 0.0) out.push_back(r.value);
        }
    }
    return out;
}

}  // namespace

const char* to_string(Closure c) {
    switch (c) {
        case Closure::C0: return "C0";
        case Closure::C0_alpha: return "C0_alpha";
        case Closure::C00: return "C00";
    }
    return "?";
}

const char* to_string(Subspace s) {
    switch (s) {
        case Subspace::U: return "U";
        case Subspace::V: return "V";
        case Subspace::W: return "W";
    }
    return "?";
}

double PiecewiseLinear::operator()(double s) const {
    if (t.empty()) return 0.0;
    if (s <= t.front()) return v.front();
    if (s >= t.back()) return v.back();
    auto it = std::upper_bound(t.begin(), t.end(), s);
    std::size_t i = static_cast<std::size_t>(it - t.begin());
    double a = t[i - 1], b = t[i];
    double lam = (s - a) / (b - a);
    return (1.0 - lam) * v[i - 1] + lam * v[i];
}

std::vector<double> EnvelopeT::breakpoints() const {
    std::vector<double> pts{0.0, t_bar};
    for (const auto* f : {&phi_minus, &phi_plus})
        for (double s : f->t)
            if (s > 0.0 && s < t_bar) pts.push_back(s);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

void validate_envelope(const EnvelopeT& env) {
    if (!(env.t_bar > 0.0) || !std::isfinite(env.t_bar))
        throw ValidationError("envelope_invalid", "t_bar must be positive and finite");
    for (const auto* f : {&env.phi_minus, &env.phi_plus}) {
        if (f->t.empty() || f->t.size() != f->v.size())
            throw ValidationError("envelope_invalid", "breakpoint lists must be non-empty and paired");
        for (std::size_t i = 0; i < f->t.size(); ++i) {
            if (!std::isfinite(f->t[i]) || !std::isfinite(f->v[i]))
                throw ValidationError("envelope_invalid", "envelope breakpoints must be finite");
            if (i > 0 && !(f->t[i] > f->t[i - 1]))
                throw ValidationError("envelope_invalid", "breakpoint times must increase");
        }
    }
    for (double s : env.breakpoints()) {
        double lo = env.phi_minus(s), hi = env.phi_plus(s);
        if (!(lo < hi))
            throw ValidationError("envelope_invalid", "phi_minus must stay below phi_plus on [0, t_bar]");
        if (hi < 0.0) throw ValidationError("envelope_invalid", "phi_plus must be nonnegative on [0, t_bar]");
    }
}

std::size_t ProblemData::count(Subspace s) const {
    return static_cast<std::size_t>(
        std::count_if(modes.begin(), modes.end(), [s](const Mode& m) { return m.subspace == s; }));
}

double ProblemData::x_min() const {
    if (modes.empty()) return 0.0;
    double x = std::numeric_limits<double>::infinity();
    for (const auto& m : modes) x = std::min(x, m.x);
    return x;
}

std::pair<Closure, double> classify_closure(int theta_w, int theta_p, const RatFun& w_hat,
                                            const RootOptions& opt) {
    if (theta_w < 1)
        throw ValidationError("reference_not_strictly_proper", "reference transform must be strictly proper");
    if (theta_p < 0) throw ValidationError("improper_plant", "plant must be proper");
    if (theta_w == 1) {
        double alpha = w_hat.num.lead() / w_hat.den.lead();
        return {theta_p > 0 ? Closure::C0_alpha : Closure::C0, alpha};
    }
    auto terms = partial_fractions(w_hat, opt);
    for (int j = 0; j <= theta_w - 2; ++j) {
        double scale = 0.0;
        for (const auto& t : terms) scale += std::abs(t.coeff) * std::pow(std::max(1.0, std::abs(t.pole)), j);
        double d = time_derivative(terms, 0.0, j);
        if (std::abs(d) > 1e-8 * std::max(scale, 1e-300)) {
            std::ostringstream os;
            os << "w^(" << j << ")(0+) = " << d << " must vanish when theta_w = " << theta_w;
            throw ValidationError("infeasible_problem", os.str());
        }
    }
    return {Closure::C00, 0.0};
}

std::vector<Mode> build_modes(const std::vector<cplx>& z_list, const std::vector<cplx>& p_list,
                              const std::vector<cplx>& v_list) {
    auto z = reduce_conjugates(z_list);
    auto p = reduce_conjugates(p_list);
    auto v = reduce_conjugates(v_list);

    for (cplx a : z)
        for (cplx b : p)
            if (coincide(a, b))
                throw ValidationError("coincident_pole_zero", "plant zero and pole coincide at " + fmt(a));
    std::vector<cplx> all;
    all.insert(all.end(), z.begin(), z.end());
    all.insert(all.end(), p.begin(), p.end());
    all.insert(all.end(), v.begin(), v.end());
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i + 1; j < all.size(); ++j)
            if (coincide(all[i], all[j]))
                throw ValidationError("coincident_points", "interpolation points coincide at " + fmt(all[i]));

    std::vector<Mode> modes;
    append_modes(modes, z, Subspace::U);
    append_modes(modes, p, Subspace::V);
    append_modes(modes, v, Subspace::W);
    return modes;
}

std::vector<double> build_rhs(const RatFun& w_hat, const std::vector<cplx>& z_list) {
    return eval_entries(w_hat, reduce_conjugates(z_list));
}

std::vector<double> build_us_objective(const RatFun& w_hat, const std::vector<cplx>& p_list,
                                       const std::vector<cplx>& v_list) {
    auto out = eval_entries(w_hat, reduce_conjugates(p_list));
    auto w = eval_entries(w_hat, reduce_conjugates(v_list));
    out.insert(out.end(), w.begin(), w.end());
    return out;
}

bool reference_is_nonnegative(const std::vector<PFTerm>& w_terms) {
    if (w_terms.empty()) return true;
    double decay = std::numeric_limits<double>::infinity();
    for (const auto& t : w_terms)
        if (t.pole.real() < 0.0) decay = std::min(decay, -t.pole.real());
    if (!std::isfinite(decay)) decay = 1.0;
    const double horizon = 40.0 / decay;
    const int samples = 10000;
    std::vector<double> vals(samples);
    double peak = 0.0;
    for (int i = 0; i < samples; ++i) {
        vals[static_cast<std::size_t>(i)] = time_eval(w_terms, horizon * i / (samples - 1));
        peak = std::max(peak, std::abs(vals[static_cast<std::size_t>(i)]));
    }
    for (double v : vals)
        if (v < -1e-12 * std::max(peak, 1e-300)) return false;

    // dominant behaviour as t -> infinity
    double re_max = -std::numeric_limits<double>::infinity();
    for (const auto& t : w_terms) re_max = std::max(re_max, t.pole.real());
    int k_max = -1;
    for (const auto& t : w_terms)
        if (std::abs(t.pole.real() - re_max) <= 1e-12 * (1.0 + std::abs(re_max))) k_max = std::max(k_max, t.k);
    double lead = 0.0;
    for (const auto& t : w_terms) {
        if (std::abs(t.pole.real() - re_max) > 1e-12 * (1.0 + std::abs(re_max)) || t.k != k_max) continue;
        if (t.pole.imag() != 0.0) return false;
        lead += t.coeff.real();
    }
    return lead > 0.0;
}

void check_envelope_compatible(const EnvelopeT& env, Closure closure, double alpha) {
    const double lo = env.phi_minus(0.0), hi = env.phi_plus(0.0);
    if (closure == Closure::C0_alpha && !(hi > alpha && alpha >= std::max(lo, 0.0))) {
        std::ostringstream os;
        os << "need phi_plus(0) > alpha >= max(phi_minus(0), 0); alpha = " << alpha;
        throw ValidationError("envelope_incompatible", os.str());
    }
    if (closure == Closure::C00 && lo > 0.0)
        throw ValidationError("envelope_incompatible", "e(0) = 0 is outside the envelope");
}

ProblemData validate_problem(const RatFun& plant, const RatFun& reference,
                             std::optional<EnvelopeT> envelope, const RootOptions& opt) {
    if (plant.den.is_zero()) throw ValidationError("zero_denominator", "plant denominator is zero");
    if (plant.num.is_zero()) throw ValidationError("zero_plant", "plant numerator is zero");
    if (reference.den.is_zero()) throw ValidationError("zero_denominator", "reference denominator is zero");
    if (reference.num.is_zero()) throw ValidationError("zero_reference", "reference numerator is zero");

    ProblemData pd;
    pd.plant = plant;
    pd.reference = reference;
    try {
        pd.theta_p = relative_degree(plant);
    } catch (const ValidationError&) {
        throw ValidationError("improper_plant", "plant numerator degree exceeds denominator degree");
    }
    try {
        pd.theta_w = relative_degree(reference);
    } catch (const ValidationError&) {
        throw ValidationError("reference_not_strictly_proper", "reference transform is improper");
    }
    if (pd.theta_w < 1)
        throw ValidationError("reference_not_strictly_proper", "reference transform must be strictly proper");

    auto roots_of = [&](const Poly& p) { return p.degree() >= 1 ? poly_roots(p, opt) : std::vector<Root>{}; };
    pd.plant_zeros = rhp_points(roots_of(plant.num), "imaginary_axis_zero", "repeated_rhp_zero");
    pd.plant_poles = rhp_points(roots_of(plant.den), "imaginary_axis_pole", "repeated_rhp_pole");
    pd.ref_zeros = rhp_points(roots_of(reference.num), "imaginary_axis_reference_zero",
                              "repeated_rhp_reference_zero");

    auto [closure, alpha] = classify_closure(pd.theta_w, pd.theta_p, reference, opt);
    pd.closure = closure;
    pd.alpha = alpha;

    pd.modes = build_modes(pd.plant_zeros, pd.plant_poles, pd.ref_zeros);
    pd.b_vec = build_rhs(reference, pd.plant_zeros);
    pd.us_obj = build_us_objective(reference, pd.plant_poles, pd.ref_zeros);
    pd.w_terms = partial_fractions(reference, opt);
    pd.reference_nonnegative = reference_is_nonnegative(pd.w_terms);

    if (envelope) {
        validate_envelope(*envelope);
        check_envelope_compatible(*envelope, pd.closure, pd.alpha);
        pd.envelope = std::move(envelope);
    }
    return pd;
}

}  // namespace perflim
