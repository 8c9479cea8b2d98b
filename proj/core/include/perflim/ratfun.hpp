#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace perflim {

using cplx = std::complex<double>;

// Real polynomial, ascending coefficients: coeffs[k] multiplies s^k.
class Poly {
public:
    Poly();
    explicit Poly(std::vector<double> coeffs);
    Poly(std::initializer_list<double> coeffs);

    static Poly from_roots(std::span<const cplx> roots, double lead = 1.0);

    const std::vector<double>& coeffs() const noexcept { return c_; }
    int degree() const noexcept { return static_cast<int>(c_.size()) - 1; }
    double lead() const noexcept { return c_.back(); }
    bool is_zero() const noexcept { return c_.size() == 1 && c_[0] == 0.0; }

    double operator()(double s) const;
    cplx operator()(cplx s) const;
    Poly derivative() const;

    friend Poly operator*(const Poly& a, const Poly& b);
    friend bool operator==(const Poly&, const Poly&) = default;

private:
    void trim();
    std::vector<double> c_;
};

struct Root {
    cplx value;
    int multiplicity = 1;
};

struct RootOptions {
    std::uint64_t seed = 0x2545f4914f6cdd1dULL;
    int max_iter = 800;
    int max_restarts = 8;
    double merge_tol = 1e-7;  // relative
};

// Roots with multiplicities. Exact zero roots are deflated first. Complex
// roots come back in exact conjugate pairs, upper half-plane member first.
std::vector<Root> poly_roots(const Poly& p, const RootOptions& opt = {});

struct RatFun {
    Poly num;
    Poly den{1.0};
};

// Throws PoleProximityError when |den(s)| is below tol * (sum |den_k||s|^k).
cplx rat_eval(const RatFun& r, cplx s, double tol = 1e-13);

// deg(den) - deg(num); ValidationError("improper") when negative.
int relative_degree(const RatFun& r);

// coeff * t^k * exp(pole * t)
struct PFTerm {
    cplx pole;
    int k = 0;
    cplx coeff;
};

std::vector<PFTerm> partial_fractions(const RatFun& r, const RootOptions& opt = {});

// Re sum c t^k e^{pole t}
double time_eval(std::span<const PFTerm> terms, double t);

// j-th derivative of time_eval at t.
double time_derivative(std::span<const PFTerm> terms, double t, int order);

enum class ModeKind { Cos, Sin };

// integral over [0, inf) of e^{-xt}cos(yt) or e^{-xt}sin(yt)
double mode_mass(double x, double y, ModeKind kind);

double mode_value(double x, double y, ModeKind kind, double t);

// Antiderivative of the mode that vanishes at infinity.
double mode_antiderivative(double x, double y, ModeKind kind, double t);

// integral over [a, b] of (e_a (b-t) + e_b (t-a)) / (b-a) times the mode,
// split as wa * e_a + wb * e_b.
struct SegmentWeights {
    double wa;
    double wb;
};
SegmentWeights segment_weights(double x, double y, ModeKind kind, double a, double b);

}  // namespace perflim
