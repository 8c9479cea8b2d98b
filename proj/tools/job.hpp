#pragma once

#include "perflim/dual.hpp"
#include "perflim/primal.hpp"
#include "perflim/setup.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace perflim::job {

struct JobConfig {
    std::vector<double> plant_num, plant_den;
    std::vector<double> ref_num, ref_den;
    std::vector<Criterion> criteria{kAllCriteria.begin(), kAllCriteria.end()};
    std::optional<EnvelopeT> envelope;
    double tol = 1e-5;
    std::size_t max_grid = 1u << 17;         // dual grid cap
    std::size_t primal_max_grid = 8192;      // primal node cap
    double horizon = 0.0;                    // 0: solver defaults
    bool gamma_reduce = false;
    bool skip_primal = false;

    friend bool operator==(const JobConfig&, const JobConfig&) = default;
};

JobConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const JobConfig& c);
JobConfig load_config(const std::filesystem::path& path);

// FNV-1a over the compact serialized config.
std::uint64_t config_hash(const JobConfig& c);

struct CriterionReport {
    Criterion criterion = Criterion::MA;
    std::optional<double> dual_value;
    std::optional<double> primal_value;
    std::optional<double> gap;
    std::optional<double> analytic_value;
    bool gamma_reduced = false;
    std::optional<DualResult> dual;
    std::optional<PrimalResult> primal;
    std::string error_kind;  // "validation", "solver" or empty
    std::string error;
};

struct ProblemEcho {
    std::vector<cplx> zeros, poles, ref_zeros;
    int theta_p = 0;
    int theta_w = 1;
    Closure closure = Closure::C0;
    double alpha = 0.0;
    double gamma = 0.0;
};

struct Report {
    ProblemEcho problem;
    std::vector<CriterionReport> criteria;
    std::vector<std::string> chain_violations;

    // 0 success, 2 validation error, 3 solver failure
    int exit_code() const;
};

inline constexpr double kGapTol = 1e-6;

// Throws ValidationError when the problem itself is rejected.
Report run(const JobConfig& config);

nlohmann::json report_to_json(const Report& r);

// Columns t, e_star, e_primal over t = 0 and 1999 log-spaced points up to the dual horizon.
void export_certificate_csv(const CriterionReport& r, const std::filesystem::path& path);

}  // namespace perflim::job
