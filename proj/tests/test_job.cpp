#include "job.hpp"

#include "perflim/errors.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace perflim;
using nlohmann::json;

namespace {

json first_order_json() {
    return json::parse(R"({
        "plant": {"num": [-2, 1], "den": [-1, 1]},
        "reference": {"num": [1], "den": [0, 1]},
        "criteria": ["os", "ma", "fl", "pos"]
    })");
}

json envelope_json() {
    return json::parse(R"({
        "plant": {"num": [1], "den": [5, -2, 1]},
        "criteria": ["os"],
        "envelope": {"t_bar": 1.0, "phi_minus": -0.1, "phi_plus": 2.0},
        "options": {"tol": 1e-4, "primal_max_grid": 4096},
        "flags": {"gamma_reduce": true}
    })");
}

std::string code_of(const json& j) {
    try {
        job::config_from_json(j);
    } catch (const ValidationError& e) {
        return e.code();
    }
    return "";
}

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
    auto p = std::filesystem::path(::testing::TempDir()) / name;
    std::ofstream(p) << body;
    return p;
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST(Config, Defaults) {
    auto c = job::config_from_json(json::parse(R"({"plant": {"num": [-2, 1], "den": [-1, 1]}})"));
    EXPECT_EQ(c.ref_num, (std::vector<double>{1.0}));
    EXPECT_EQ(c.ref_den, (std::vector<double>{0.0, 1.0}));
    EXPECT_EQ(c.criteria.size(), kAllCriteria.size());
    EXPECT_FALSE(c.envelope.has_value());
}

TEST(Config, RoundTrip) {
    for (const json& j : {first_order_json(), envelope_json()}) {
        auto c = job::config_from_json(j);
        EXPECT_EQ(job::config_from_json(job::config_to_json(c)), c);
    }
    auto env = job::config_from_json(envelope_json());
    ASSERT_TRUE(env.envelope.has_value());
    EXPECT_DOUBLE_EQ(env.envelope->phi_minus(0.5), -0.1);
    EXPECT_TRUE(env.gamma_reduce);
    EXPECT_EQ(env.primal_max_grid, 4096u);
}

TEST(Config, Rejections) {
    EXPECT_EQ(code_of(json::parse(R"({})")), "invalid_config");
    EXPECT_EQ(code_of(json::parse(R"({"plant": {"num": ["a"]}})")), "invalid_config");
    EXPECT_EQ(code_of(json::parse(R"({"plant": {"num": [1], "den": [1, 1]}, "criteria": ["settling"]})")),
              "invalid_config");
    EXPECT_EQ(code_of(json::parse(R"({"plant": {"num": [1], "den": [1, 1]}, "envelope": {"phi_minus": 0}})")),
              "invalid_config");
    try {
        job::load_config("/nonexistent/config.json");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.code(), "unreadable_config");
    }
}

TEST(Config, HashIsStableAndSensitive) {
    auto a = job::config_from_json(first_order_json());
    auto b = job::config_from_json(first_order_json());
    EXPECT_EQ(job::config_hash(a), job::config_hash(b));
    b.tol = 2e-5;
    EXPECT_NE(job::config_hash(a), job::config_hash(b));
}

TEST(Run, FirstOrderReport) {
    auto r = job::run(job::config_from_json(first_order_json()));
    EXPECT_EQ(r.exit_code(), 0);
    EXPECT_TRUE(r.chain_violations.empty());
    ASSERT_EQ(r.criteria.size(), 4u);
    for (const auto& c : r.criteria) {
        ASSERT_TRUE(c.dual_value && c.primal_value && c.gap && c.analytic_value) << to_string(c.criterion);
        EXPECT_GE(*c.gap, -job::kGapTol);
        EXPECT_NEAR(*c.dual_value, *c.analytic_value, 1e-3 * *c.analytic_value);
    }
}

TEST(Run, BitwiseDeterministic) {
    auto cfg = job::config_from_json(first_order_json());
    EXPECT_EQ(job::report_to_json(job::run(cfg)).dump(), job::report_to_json(job::run(cfg)).dump());
}

TEST(Run, ValidationErrorPropagates) {
    auto cfg = job::config_from_json(json::parse(R"({"plant": {"num": [1], "den": [1, 0, 1]}})"));
    EXPECT_THROW(job::run(cfg), ValidationError);
}

TEST(Run, PerCriterionValidationError) {
    auto cfg = job::config_from_json(json::parse(R"({
        "plant": {"num": [-1, 1], "den": [-2, 1]},
        "reference": {"num": [1, 1], "den": [5, 2, 1]},
        "criteria": ["us", "ma"]})"));
    auto r = job::run(cfg);
    EXPECT_EQ(r.criteria[0].error_kind, "validation");
    EXPECT_TRUE(r.criteria[1].error_kind.empty());
    EXPECT_EQ(r.exit_code(), 2);
}

TEST(Export, CsvLayout) {
    auto cfg = job::config_from_json(first_order_json());
    cfg.criteria = {Criterion::OS};
    auto r = job::run(cfg);
    auto path = std::filesystem::path(::testing::TempDir()) / "cert_os.csv";
    job::export_certificate_csv(r.criteria[0], path);
    auto lines = read_lines(path);
    ASSERT_EQ(lines.size(), 2001u);
    EXPECT_EQ(lines[0], "t,e_star,e_primal");
    EXPECT_EQ(lines[1].substr(0, 2), "0,");
    // e*(0) = 2 (e^0 - e^0) = 0 for the optimal overshoot certificate
    double t0 = 0, e0 = 1;
    char comma;
    std::istringstream(lines[1]) >> t0 >> comma >> e0;
    EXPECT_NEAR(e0, 0.0, 1e-6);
    EXPECT_NE(lines.back().back(), ',');

    cfg.skip_primal = true;
    auto r2 = job::run(cfg);
    job::export_certificate_csv(r2.criteria[0], path);
    lines = read_lines(path);
    ASSERT_EQ(lines.size(), 2001u);
    EXPECT_EQ(lines[5].back(), ',');
}

#ifdef PERFLIM_CLI_PATH
namespace {

int run_cli(const std::string& args, const std::filesystem::path& out) {
    std::string cmd = std::string(PERFLIM_CLI_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, SuccessPrintsJson) {
    auto cfg = temp_file("ok.json", first_order_json().dump());
    auto out = std::filesystem::path(::testing::TempDir()) / "ok.out";
    EXPECT_EQ(run_cli(cfg.string() + " --criteria os --no-primal", out), 0);
    std::ifstream in(out);
    auto j = json::parse(in);
    ASSERT_EQ(j.at("criteria").size(), 1u);
    EXPECT_NEAR(j.at("criteria")[0].at("dual_value").get<double>(), 1.0, 1e-4);
    EXPECT_TRUE(j.at("criteria")[0].at("primal_value").is_null());
}

TEST(Cli, ValidationExitCode) {
    auto out = std::filesystem::path(::testing::TempDir()) / "bad.out";
    auto bad = temp_file("bad.json", R"({"plant": {"num": [1], "den": [1, 0, 1]}})");
    EXPECT_EQ(run_cli(bad.string(), out), 2);
    auto garbled = temp_file("garbled.json", "{ not json");
    EXPECT_EQ(run_cli(garbled.string(), out), 2);
    EXPECT_EQ(run_cli("/nonexistent.json", out), 2);
}

TEST(Cli, ExportsCertificates) {
    auto cfg = temp_file("cert.json", first_order_json().dump());
    auto out = std::filesystem::path(::testing::TempDir()) / "cert.out";
    auto csv = std::filesystem::path(::testing::TempDir()) / "cli_cert.csv";
    EXPECT_EQ(run_cli(cfg.string() + " --criteria os,ma --no-primal --export-cert " + csv.string(), out), 0);
    auto dir = csv.parent_path();
    EXPECT_TRUE(std::filesystem::exists(dir / "cli_cert_os.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "cli_cert_ma.csv"));
}
#endif
