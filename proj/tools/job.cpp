#include "job.hpp"

#include "perflim/analytic.hpp"
#include "perflim/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <system_error>

namespace perflim::job {

using nlohmann::json;

namespace {

ValidationError bad_config(const std::string& what) { return ValidationError("invalid_config", what); }

std::vector<double> coeff_list(const json& j, const char* name) {
    if (!j.is_array() || j.empty()) throw bad_config(std::string(name) + " must be a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw bad_config(std::string(name) + " must contain numbers only");
        out.push_back(v.get<double>());
    }
    return out;
}

void read_ratfun(const json& j, const char* name, std::vector<double>& num, std::vector<double>& den) {
    if (!j.is_object() || !j.contains("num")) throw bad_config(std::string(name) + " needs a \"num\" list");
    num = coeff_list(j.at("num"), name);
    den = j.contains("den") ? coeff_list(j.at("den"), name) : std::vector<double>{1.0};
}

PiecewiseLinear read_piecewise(const json& j, double t_bar, const char* name) {
    if (j.is_number()) {
        double v = j.get<double>();
        return {{0.0, t_bar}, {v, v}};
    }
    if (!j.is_object() || !j.contains("t") || !j.contains("v"))
        throw bad_config(std::string(name) + " must be a number or {\"t\": [...], \"v\": [...]}");
    return {coeff_list(j.at("t"), name), coeff_list(j.at("v"), name)};
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json opt_number(const std::optional<double>& v) { return v ? number_or_null(*v) : json(nullptr); }

json complex_list(const std::vector<cplx>& v) {
    json out = json::array();
    for (cplx z : v) out.push_back({z.real(), z.imag()});
    return out;
}

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::optional<double> analytic_for(Criterion c, const FirstOrderMatch& m) {
    FirstOrderLimits f = first_order_limits(m.z1, m.p1);
    switch (c) {
        case Criterion::MA: return m.step * f.ma;
        case Criterion::POS: return m.step * f.pos;
        case Criterion::OS: return m.step * f.os;
        case Criterion::FL: return m.step * f.fl;
        case Criterion::US: return std::nullopt;
    }
    return std::nullopt;
}

CriterionReport run_one(const ProblemData& pd, Criterion crit, const JobConfig& cfg,
                        const std::optional<FirstOrderMatch>& first) {
    CriterionReport r;
    r.criterion = crit;
    auto record = [&r](const char* kind, const std::exception& e) {
        if (r.error_kind.empty() || std::string(kind) == "validation") r.error_kind = kind;
        if (!r.error.empty()) r.error += "; ";
        r.error += e.what();
    };

    DualOptions dopt;
    dopt.tol = cfg.tol;
    dopt.max_grid = cfg.max_grid;
    dopt.horizon = cfg.horizon;
    try {
        if (cfg.gamma_reduce && (crit == Criterion::OS || crit == Criterion::US) && pd.ref_zeros.empty()) {
            r.dual = solve_dual(reduce_by_gamma(pd, crit), crit, dopt);
            r.gamma_reduced = true;
        } else {
            r.dual = solve_dual(pd, crit, dopt);
        }
        r.dual_value = r.dual->value;
    } catch (const ValidationError& e) {
        record("validation", e);
    } catch (const std::exception& e) {
        record("solver", e);
    }

    if (!cfg.skip_primal) {
        PrimalOptions popt;
        popt.tol = std::max(cfg.tol, 1e-3);
        popt.max_grid = cfg.primal_max_grid;
        popt.horizon = cfg.horizon;
        try {
            r.primal = solve_primal(pd, crit, std::nullopt, popt);
            r.primal_value = r.primal->value;
        } catch (const ValidationError& e) {
            record("validation", e);
        } catch (const std::exception& e) {
            record("solver", e);
        }
    }

    if (r.dual_value && r.primal_value) {
        r.gap = *r.primal_value - *r.dual_value;
        if (*r.gap < -kGapTol) {
            if (r.error_kind.empty()) r.error_kind = "solver";
            if (!r.error.empty()) r.error += "; ";
            r.error += "primal value falls below the dual bound by " + fmt(-*r.gap);
        }
    }
    if (first) r.analytic_value = analytic_for(crit, *first);
    return r;
}

}  // namespace

JobConfig config_from_json(const json& j) {
    if (!j.is_object()) throw bad_config("config must be a JSON object");
    JobConfig c;
    if (!j.contains("plant")) throw bad_config("missing \"plant\"");
    read_ratfun(j.at("plant"), "plant", c.plant_num, c.plant_den);
    if (j.contains("reference")) read_ratfun(j.at("reference"), "reference", c.ref_num, c.ref_den);
    else {
        c.ref_num = {1.0};
        c.ref_den = {0.0, 1.0};
    }
    if (j.contains("criteria")) {
        c.criteria.clear();
        for (const auto& v : j.at("criteria")) {
            auto crit = v.is_string() ? parse_criterion(v.get<std::string>()) : std::nullopt;
            if (!crit) throw bad_config("unknown criterion " + v.dump());
            c.criteria.push_back(*crit);
        }
        if (c.criteria.empty()) throw bad_config("criteria list is empty");
    }
    if (j.contains("envelope") && !j.at("envelope").is_null()) {
        const auto& e = j.at("envelope");
        EnvelopeT env;
        if (!e.contains("t_bar") || !e.at("t_bar").is_number()) throw bad_config("envelope needs a numeric t_bar");
        env.t_bar = e.at("t_bar").get<double>();
        if (!e.contains("phi_minus") || !e.contains("phi_plus")) throw bad_config("envelope needs phi_minus and phi_plus");
        env.phi_minus = read_piecewise(e.at("phi_minus"), env.t_bar, "phi_minus");
        env.phi_plus = read_piecewise(e.at("phi_plus"), env.t_bar, "phi_plus");
        c.envelope = env;
    }
    if (j.contains("options")) {
        const auto& o = j.at("options");
        try {
            c.tol = o.value("tol", c.tol);
            c.max_grid = o.value("max_grid", c.max_grid);
            c.primal_max_grid = o.value("primal_max_grid", c.primal_max_grid);
            c.horizon = o.value("horizon", c.horizon);
        } catch (const json::exception& e) {
            throw bad_config(std::string("bad option: ") + e.what());
        }
        if (!(c.tol > 0.0)) throw bad_config("tol must be positive");
    }
    if (j.contains("flags")) {
        const auto& f = j.at("flags");
        try {
            c.gamma_reduce = f.value("gamma_reduce", c.gamma_reduce);
            c.skip_primal = f.value("skip_primal", c.skip_primal);
        } catch (const json::exception& e) {
            throw bad_config(std::string("bad flag: ") + e.what());
        }
    }
    return c;
}

json config_to_json(const JobConfig& c) {
    json j;
    j["plant"] = {{"num", c.plant_num}, {"den", c.plant_den}};
    j["reference"] = {{"num", c.ref_num}, {"den", c.ref_den}};
    json crits = json::array();
    for (Criterion k : c.criteria) crits.push_back(to_string(k));
    j["criteria"] = crits;
    if (c.envelope) {
        const auto& e = *c.envelope;
        j["envelope"] = {{"t_bar", e.t_bar},
                         {"phi_minus", {{"t", e.phi_minus.t}, {"v", e.phi_minus.v}}},
                         {"phi_plus", {{"t", e.phi_plus.t}, {"v", e.phi_plus.v}}}};
    }
    j["options"] = {{"tol", c.tol}, {"max_grid", c.max_grid}, {"primal_max_grid", c.primal_max_grid},
                    {"horizon", c.horizon}};
    j["flags"] = {{"gamma_reduce", c.gamma_reduce}, {"skip_primal", c.skip_primal}};
    return j;
}

JobConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("unreadable_config", "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw bad_config(std::string("malformed JSON: ") + e.what());
    }
    return config_from_json(j);
}

std::uint64_t config_hash(const JobConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : config_to_json(c).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

int Report::exit_code() const {
    int code = 0;
    for (const auto& c : criteria) {
        if (c.error_kind == "validation") return 2;
        if (!c.error_kind.empty()) code = 3;
    }
    return code;
}

Report run(const JobConfig& config) {
    if (config.criteria.empty()) throw bad_config("criteria list is empty");
    RootOptions ro;
    ro.seed = config_hash(config);
    RatFun plant{Poly(config.plant_num), Poly(config.plant_den)};
    RatFun ref{Poly(config.ref_num), Poly(config.ref_den)};
    const ProblemData pd = validate_problem(plant, ref, config.envelope, ro);

    Report rep;
    rep.problem = {pd.plant_zeros, pd.plant_poles, pd.ref_zeros, pd.theta_p,
                   pd.theta_w,     pd.closure,     pd.alpha,     gamma_of(pd)};
    const auto first = match_first_order(pd);

    std::vector<std::future<CriterionReport>> jobs;
    for (Criterion c : config.criteria)
        jobs.push_back(std::async(std::launch::async, [&pd, &config, &first, c] {
            return run_one(pd, c, config, first);
        }));
    for (auto& f : jobs) rep.criteria.push_back(f.get());

    CriterionValues vals;
    double scale = 0.0;
    for (const auto& c : rep.criteria) {
        if (!c.dual_value) continue;
        scale = std::max(scale, std::abs(*c.dual_value));
        switch (c.criterion) {
            case Criterion::MA: vals.ma = c.dual_value; break;
            case Criterion::POS: vals.pos = c.dual_value; break;
            case Criterion::OS: vals.os = c.dual_value; break;
            case Criterion::US: vals.us = c.dual_value; break;
            case Criterion::FL: vals.fl = c.dual_value; break;
        }
    }
    rep.chain_violations = check_inequality_chain(vals, 0.02 * scale);
    return rep;
}

json report_to_json(const Report& r) {
    json out;
    const auto& p = r.problem;
    out["problem"] = {{"zeros", complex_list(p.zeros)},     {"poles", complex_list(p.poles)},
                      {"ref_zeros", complex_list(p.ref_zeros)}, {"theta_p", p.theta_p},
                      {"theta_w", p.theta_w},                 {"closure", to_string(p.closure)},
                      {"alpha", p.alpha},                     {"gamma", number_or_null(p.gamma)}};
    json crits = json::array();
    for (const auto& c : r.criteria) {
        json j;
        j["criterion"] = to_string(c.criterion);
        j["dual_value"] = opt_number(c.dual_value);
        j["primal_value"] = opt_number(c.primal_value);
        j["gap"] = opt_number(c.gap);
        j["analytic_value"] = opt_number(c.analytic_value);
        json diag;
        diag["gamma_reduced"] = c.gamma_reduced;
        if (c.dual) {
            const auto& d = *c.dual;
            j["corrected"] = d.corrected;
            j["correction"] = d.correction;
            json modes = json::array();
            for (const auto& m : d.modes)
                modes.push_back({{"x", m.x},
                                 {"y", m.y},
                                 {"kind", m.kind == ModeKind::Cos ? "cos" : "sin"},
                                 {"subspace", to_string(m.subspace)}});
            j["certificate"] = {{"coeffs", d.coeffs},
                                {"modes", modes},
                                {"mass", d.masses.total},
                                {"positive_mass", d.masses.positive},
                                {"negative_mass", d.masses.negative},
                                {"max_sign_violation", d.max_sign_violation},
                                {"violation_bound", d.violation_bound},
                                {"horizon", d.horizon}};
            diag["dual_grid_points"] = d.grid_stats.points;
            diag["dual_refinements"] = d.grid_stats.refinements;
            diag["dual_lp_value"] = number_or_null(d.lp_value);
            json hist = json::array();
            for (double v : d.history) hist.push_back(number_or_null(v));
            diag["dual_history"] = hist;
        } else {
            j["corrected"] = false;
            j["certificate"] = nullptr;
        }
        if (c.primal) {
            diag["primal_nodes"] = c.primal->nodes;
            diag["primal_horizon"] = c.primal->horizon;
            diag["moment_residual"] = c.primal->moment_residual;
            diag["primal_converged"] = c.primal->converged;
        }
        j["diagnostics"] = diag;
        j["error"] = c.error_kind.empty() ? json(nullptr) : json{{"kind", c.error_kind}, {"message", c.error}};
        crits.push_back(j);
    }
    out["criteria"] = crits;
    out["chain_violations"] = r.chain_violations;
    out["exit_code"] = r.exit_code();
    return out;
}

void export_certificate_csv(const CriterionReport& r, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + path.string());
    double th = 10.0;
    if (r.dual && r.dual->horizon > 0.0) th = r.dual->horizon;
    else if (r.primal && r.primal->horizon > 0.0) th = r.primal->horizon;

    constexpr int kRows = 2000;
    std::vector<double> ts{0.0};
    const double t0 = 1e-6 * th;
    for (int i = 0; i < kRows - 1; ++i) ts.push_back(t0 * std::pow(th / t0, static_cast<double>(i) / (kRows - 2)));
    ts.back() = th;

    out << "t,e_star,e_primal\n";
    for (double t : ts) {
        double es = 0.0;
        if (r.dual && !r.dual->coeffs.empty()) es = certificate_value(r.dual->modes, r.dual->coeffs, t);
        out << fmt(t) << ',' << fmt(es) << ',';
        if (r.primal) out << fmt(r.primal->signal.value(t));
        out << '\n';
    }
    if (!out) throw std::system_error(errno, std::generic_category(), "write failed for " + path.string());
}

}  // namespace perflim::job
