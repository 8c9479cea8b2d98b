#pragma once

#include "perflim/setup.hpp"

#include <optional>
#include <string>
#include <vector>

namespace perflim {

struct FirstOrderLimits {
    double h = 0.0;
    double os = 0.0;
    double ma = 0.0;
    double fl = 0.0;
    double pos = 1.0;
};

// Plant (s - z1)/(s - p1) with a unit step; needs z1 > p1 > 0.
FirstOrderLimits first_order_limits(double z1, double p1);

// (h+1)^(h+1) / (2 h^h), in log space for large h.
double first_order_fl(double h);

// Smallest interpolation point on the positive real axis, +inf if none.
double gamma_of(const ProblemData& pd);

struct CriterionValues {
    std::optional<double> ma, pos, os, us, fl;
};

// Checks max(pos, os) <= ma, ma <= 2 fl, 2 fl <= 2 ma, each with slack `tol`.
// Missing values skip the comparisons that need them.
std::vector<std::string> check_inequality_chain(const CriterionValues& v, double tol);

// Problem matches the first-order family: one real RHP zero z, one real RHP pole p,
// z > p, no reference zeros, reference a step of height k. Returns (z, p, k).
struct FirstOrderMatch {
    double z1, p1, step;
};
std::optional<FirstOrderMatch> match_first_order(const ProblemData& pd);

}  // namespace perflim
