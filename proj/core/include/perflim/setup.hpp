#pragma once

#include "perflim/ratfun.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace perflim {

enum class Subspace { U, V, W };

struct Mode {
    double x = 1.0;
    double y = 0.0;
    ModeKind kind = ModeKind::Cos;
    Subspace subspace = Subspace::U;
    int source = 0;  // index into the originating point list

    double value(double t) const { return mode_value(x, y, kind, t); }
    double mass() const { return mode_mass(x, y, kind); }
    friend bool operator==(const Mode&, const Mode&) = default;
};

enum class Closure { C0, C0_alpha, C00 };

const char* to_string(Closure c);
const char* to_string(Subspace s);

// Piecewise-linear function through (t[i], v[i]); constant beyond the ends.
struct PiecewiseLinear {
    std::vector<double> t;
    std::vector<double> v;
    double operator()(double s) const;
    friend bool operator==(const PiecewiseLinear&, const PiecewiseLinear&) = default;
};

struct EnvelopeT {
    double t_bar = 1.0;
    PiecewiseLinear phi_minus;
    PiecewiseLinear phi_plus;

    // All breakpoints inside [0, t_bar], t_bar included.
    std::vector<double> breakpoints() const;
    friend bool operator==(const EnvelopeT&, const EnvelopeT&) = default;
};

// Structural checks on an envelope alone (ordering of the bounds, phi+ >= 0).
void validate_envelope(const EnvelopeT& env);

// The boundary value the closure forces on e(0) must lie inside the envelope.
void check_envelope_compatible(const EnvelopeT& env, Closure closure, double alpha);

struct ProblemData {
    RatFun plant;
    RatFun reference;
    std::vector<cplx> plant_zeros;  // open RHP, one per conjugate pair
    std::vector<cplx> plant_poles;
    std::vector<cplx> ref_zeros;
    int theta_p = 0;
    int theta_w = 1;
    Closure closure = Closure::C0;
    double alpha = 0.0;
    std::vector<Mode> modes;       // U modes, then V, then W
    std::vector<double> b_vec;     // one per U mode
    std::vector<double> us_obj;    // one per V or W mode
    std::vector<PFTerm> w_terms;
    std::optional<EnvelopeT> envelope;
    bool reference_nonnegative = false;

    std::size_t count(Subspace s) const;
    double x_min() const;  // smallest decay among modes; 0 when empty
};

std::pair<Closure, double> classify_closure(int theta_w, int theta_p, const RatFun& w_hat,
                                            const RootOptions& opt = {});

// Conjugates are reduced to the upper half-plane member before modes are made.
std::vector<Mode> build_modes(const std::vector<cplx>& z_list, const std::vector<cplx>& p_list,
                              const std::vector<cplx>& v_list);

std::vector<double> build_rhs(const RatFun& w_hat, const std::vector<cplx>& z_list);
std::vector<double> build_us_objective(const RatFun& w_hat, const std::vector<cplx>& p_list,
                                       const std::vector<cplx>& v_list);

// Samples w on [0, 40/decay] and inspects the dominant partial-fraction term.
bool reference_is_nonnegative(const std::vector<PFTerm>& w_terms);

ProblemData validate_problem(const RatFun& plant, const RatFun& reference,
                             std::optional<EnvelopeT> envelope = std::nullopt,
                             const RootOptions& opt = {});

}  // namespace perflim
