#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace perflim {

enum class Criterion { MA, POS, OS, US, FL };

inline constexpr std::array<Criterion, 5> kAllCriteria{Criterion::MA, Criterion::POS, Criterion::OS,
                                                       Criterion::US, Criterion::FL};

// Lower-case names: "ma", "pos", "os", "us", "fl".
const char* to_string(Criterion c);
std::optional<Criterion> parse_criterion(std::string_view name);

// Sign required of the dual function: -1 (e* <= 0), +1 (e* >= 0), 0 (none).
int dual_sign(Criterion c);

}  // namespace perflim
