#include "perflim/criterion.hpp"

#include <algorithm>
#include <cctype>

namespace perflim {

const char* to_string(Criterion c) {
    switch (c) {
        case Criterion::MA: return "ma";
        case Criterion::POS: return "pos";
        case Criterion::OS: return "os";
        case Criterion::US: return "us";
        case Criterion::FL: return "fl";
    }
    return "?";
}

std::optional<Criterion> parse_criterion(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
    for (Criterion c : kAllCriteria)
        if (s == to_string(c)) return c;
    return std::nullopt;
}

int dual_sign(Criterion c) {
    switch (c) {
        case Criterion::OS:
        case Criterion::US: return -1;
        case Criterion::POS: return +1;
        default: return 0;
    }
}

}  // namespace perflim
