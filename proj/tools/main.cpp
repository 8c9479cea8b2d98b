#include "job.hpp"

#include "perflim/errors.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

namespace {

std::filesystem::path suffixed(const std::filesystem::path& p, const char* crit) {
    auto out = p;
    out.replace_filename(p.stem().string() + "_" + crit + p.extension().string());
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace perflim;
    CLI::App app{"Limits of achievable tracking performance for a SISO plant and reference"};
    std::string config_path, criteria, cert_path, json_path;
    bool no_primal = false, gamma_reduce = false;
    double tol = 0.0;
    app.add_option("config", config_path, "JSON problem file")->required();
    app.add_option("--criteria", criteria, "comma-separated subset of ma,pos,os,us,fl");
    app.add_flag("--no-primal", no_primal, "skip the primal (upper bound) solves");
    app.add_flag("--gamma-reduce", gamma_reduce, "drop slow oscillatory modes before the OS/US duals");
    app.add_option("--tol", tol, "relative refinement tolerance")->check(CLI::PositiveNumber);
    app.add_option("--export-cert", cert_path, "CSV of e* and the primal signal");
    app.add_option("--json-out", json_path, "write the report here instead of stdout");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors count as validation errors
    }

    job::Report report;
    job::JobConfig cfg;
    try {
        cfg = job::load_config(config_path);
        if (!criteria.empty()) {
            cfg.criteria.clear();
            std::stringstream ss(criteria);
            std::string item;
            while (std::getline(ss, item, ',')) {
                auto c = parse_criterion(item);
                if (!c) throw ValidationError("invalid_config", "unknown criterion '" + item + "'");
                cfg.criteria.push_back(*c);
            }
        }
        if (no_primal) cfg.skip_primal = true;
        if (gamma_reduce) cfg.gamma_reduce = true;
        if (tol > 0.0) cfg.tol = tol;
        report = job::run(cfg);
    } catch (const ValidationError& e) {
        std::cerr << "perflim: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "perflim: " << e.what() << '\n';
        return 3;
    }

    const auto doc = job::report_to_json(report);
    if (json_path.empty()) {
        std::cout << doc.dump(2) << '\n';
    } else {
        std::ofstream out(json_path);
        if (!out) {
            std::cerr << "perflim: cannot write " << json_path << '\n';
            return 3;
        }
        out << doc.dump(2) << '\n';
    }

    if (!cert_path.empty()) {
        try {
            for (const auto& c : report.criteria) {
                auto path = report.criteria.size() > 1 ? suffixed(cert_path, to_string(c.criterion))
                                                       : std::filesystem::path(cert_path);
                job::export_certificate_csv(c, path);
            }
        } catch (const std::exception& e) {
            std::cerr << "perflim: " << e.what() << '\n';
            return 3;
        }
    }

    for (const auto& c : report.criteria)
        if (!c.error.empty()) std::cerr << "perflim: " << to_string(c.criterion) << ": " << c.error << '\n';
    return report.exit_code();
}
