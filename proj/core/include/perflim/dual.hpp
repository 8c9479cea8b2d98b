#pragma once

#include "perflim/criterion.hpp"
#include "perflim/lp.hpp"
#include "perflim/setup.hpp"

#include <span>
#include <string>
#include <vector>

namespace perflim {

// Which f# correction to use in closure C0_alpha.
//  Derived: obtained by maximizing over the Dirac weight at t = 0.
//  Lemma:   nonzero only for FL, alpha (1/2 - int e*_+).
enum class SharpVariant { Derived, Lemma };

struct DualOptions {
    double tol = 1e-5;          // relative change between refinements
    double abs_tol = 1e-7;      // absolute floor on that change, times max(1, |g|_inf)
    std::size_t max_grid = 1u << 17;
    double cert_tol = 1e-6;     // sign violation relative to sup |e*|
    double eps_tail = 1e-10;
    std::size_t log_points = 512;
    double horizon = 0.0;       // 0: ln(1/eps_tail) / x_min
    SharpVariant sharp = SharpVariant::Derived;
    LpOptions lp;
};

struct CertificateMasses {
    double total = 0.0;     // int |e*|
    double positive = 0.0;  // int e*_+
    double negative = 0.0;  // int e*_-  (<= 0)
};

struct CertificateCheck {
    double max_sign_violation = 0.0;  // relative to sup |e*|
    double violation_at = 0.0;
    double violation_bound = 0.0;     // sampled violation plus Lipschitz slack, relative
    double sup_abs = 0.0;
    CertificateMasses masses;
    std::vector<double> roots;        // sign changes of e*
};

struct GridStats {
    std::size_t points = 0;
    std::size_t refinements = 0;
};

struct DualResult {
    Criterion criterion = Criterion::OS;
    double value = 0.0;
    std::vector<double> coeffs;  // over `modes`
    std::vector<Mode> modes;
    double max_sign_violation = 0.0;
    double violation_bound = 0.0;
    double mass_used = 0.0;
    CertificateMasses masses;
    double correction = 0.0;
    bool corrected = false;
    double lp_value = 0.0;       // discretized optimum on the final grid
    double horizon = 0.0;
    GridStats grid_stats;
    std::vector<double> history;  // verified value per refinement round
};

// Objective vector over pd.modes: b on U modes for MA/POS/OS/FL, us_obj on V and W for US.
std::vector<double> dual_objective_vector(const ProblemData& pd, Criterion crit);

double compute_sharp_correction(Criterion crit, Closure closure, double alpha,
                                const CertificateMasses& masses,
                                SharpVariant variant = SharpVariant::Derived);

// Drop oscillatory modes decaying slower than the smallest real interpolation point.
ProblemData reduce_by_gamma(const ProblemData& pd, Criterion crit);

double dual_horizon(const ProblemData& pd, const DualOptions& opt = {});

// Exact masses and sampled sign check of e* = sum coeffs_i mode_i.
// `grid` defaults to the initial dual grid; samples are taken at ten times its density.
CertificateCheck inspect_certificate(std::span<const Mode> modes, Criterion crit,
                                     std::span<const double> coeffs, std::span<const double> grid,
                                     double horizon);

// As inspect_certificate, throwing CertificateRejected above opt.cert_tol.
CertificateCheck verify_certificate(const ProblemData& pd, Criterion crit,
                                    std::span<const double> coeffs, const DualOptions& opt = {});

DualResult solve_dual(const ProblemData& pd, Criterion crit, const DualOptions& opt = {});

// e*(t) for a certificate.
double certificate_value(std::span<const Mode> modes, std::span<const double> coeffs, double t);

}  // namespace perflim
