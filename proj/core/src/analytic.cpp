#include "perflim/analytic.hpp"

#include "perflim/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace perflim {

double first_order_fl(double h) {
    if (h > 50.0) return std::exp((h + 1.0) * std::log(h + 1.0) - h * std::log(h)) / 2.0;
    return std::pow(h + 1.0, h + 1.0) / (2.0 * std::pow(h, h));
}

FirstOrderLimits first_order_limits(double z1, double p1) {
    if (!(p1 > 0.0) || !(z1 > p1)) {
        std::ostringstream os;
        os << "first-order formulas need z1 > p1 > 0 (got z1=" << z1 << ", p1=" << p1 << ")";
        throw ValidationError("out_of_hypothesis", os.str());
    }
    FirstOrderLimits f;
    f.h = p1 / (z1 - p1);
    f.os = f.h;
    f.ma = 1.0 / (1.0 - std::exp2(-1.0 / f.h));
    f.fl = first_order_fl(f.h);
    f.pos = 1.0;
    return f;
}

double gamma_of(const ProblemData& pd) {
    double g = std::numeric_limits<double>::infinity();
    for (const auto* list : {&pd.plant_zeros, &pd.plant_poles, &pd.ref_zeros})
        for (cplx p : *list)
            if (p.imag() == 0.0) g = std::min(g, p.real());
    return g;
}

std::vector<std::string> check_inequality_chain(const CriterionValues& v, double tol) {
    std::vector<std::string> out;
    auto report = [&](const char* rel, double lhs, double rhs) {
        if (lhs > rhs + tol) {
            std::ostringstream os;
            os << rel << " violated: " << lhs << " > " << rhs;
            out.push_back(os.str());
        }
    };
    if (v.ma) {
        if (v.pos) report("pos <= ma", *v.pos, *v.ma);
        if (v.os) report("os <= ma", *v.os, *v.ma);
        if (v.fl) {
            report("ma <= 2*fl", *v.ma, 2.0 * *v.fl);
            report("2*fl <= 2*ma", 2.0 * *v.fl, 2.0 * *v.ma);
        }
    }
    return out;
}

std::optional<FirstOrderMatch> match_first_order(const ProblemData& pd) {
    if (pd.plant_zeros.size() != 1 || pd.plant_poles.size() != 1 || !pd.ref_zeros.empty()) return std::nullopt;
    cplx z = pd.plant_zeros[0], p = pd.plant_poles[0];
    if (z.imag() != 0.0 || p.imag() != 0.0 || !(z.real() > p.real())) return std::nullopt;
    if (pd.theta_p != 0) return std::nullopt;
    const auto& num = pd.reference.num;
    const auto& den = pd.reference.den;
    if (num.degree() != 0 || den.degree() != 1 || den.coeffs()[0] != 0.0) return std::nullopt;
    double k = num.lead() / den.lead();
    if (!(k > 0.0)) return std::nullopt;
    return FirstOrderMatch{z.real(), p.real(), k};
}

}  // namespace perflim
