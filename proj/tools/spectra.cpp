// Command-line front end: solve, sweep, criteria, simulate, verify.

#include <agespec/agespec.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace agespec;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config_path;
    std::string output_dir = ".";
    std::vector<std::string> overrides;
    bool strict = false;
    std::optional<std::uint64_t> seed;
    int jobs = default_jobs();
};

/// Seed precedence: config < SPECTRA_SEED < --seed.
std::optional<std::uint64_t> resolve_seed(const Common& c) {
    if (c.seed) return c.seed;
    if (const char* env = std::getenv("SPECTRA_SEED"); env && *env) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (*end != '\0') fail(ErrorKind::config, "seed", std::string("SPECTRA_SEED is not an integer: ") + env);
        return static_cast<std::uint64_t>(v);
    }
    return std::nullopt;
}

struct Loaded {
    ScenarioConfig cfg;
    std::vector<std::string> warnings;
};

Loaded load(const Common& c) {
    if (c.config_path.empty()) fail(ErrorKind::config, "missing_config", "--config is required");
    if (!fs::exists(c.config_path)) fail(ErrorKind::config, "io", "config '" + c.config_path + "' does not exist");
    auto ls = load_scenario(c.config_path, c.overrides);
    Loaded out{ls.config, ls.warnings};
    if (c.strict) out.cfg.strict = true;
    if (auto s = resolve_seed(c)) out.cfg.seed = *s;
    auto w = enforce_assumptions(out.cfg);
    out.warnings.insert(out.warnings.end(), w.begin(), w.end());
    for (const auto& m : out.warnings) std::cerr << "warning: " << m << "\n";
    return out;
}

std::string out_path(const Common& c, const std::string& file) {
    fs::create_directories(c.output_dir);
    return (fs::path(c.output_dir) / file).string();
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

/// Runs `fn`, mapping domain errors to "not_applicable" and numerical ones to "error".
template <class Fn>
json attempt(Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::verification) throw;
        json j = error_json(e);
        j["status"] = e.kind() == ErrorKind::domain ? "not_applicable" : "error";
        return j;
    }
}

int cmd_solve(const Common& c) {
    auto L = load(c);
    auto p = SpectralProblem::build(L.cfg);
    auto rep = solve_spectral_bound(p);
    json j = to_json(rep, L.cfg.tol.root_tol);
    j["scenario"] = L.cfg.name;
    j["warnings"] = L.warnings;
    save_report(out_path(c, "spectral_report.json"), j);
    write_text_file(out_path(c, "eigenfunction.csv"), eigenfunction_csv(p.tables, rep.eigfun));
    print({{"scenario", L.cfg.name},
           {"s_A", rep.s_A},
           {"s_B1C", rep.s_B1C},
           {"existence", rep.existence(L.cfg.tol.root_tol)},
           {"r_M", rep.r_M},
           {"residual_M", rep.residual_M},
           {"files", {out_path(c, "spectral_report.json"), out_path(c, "eigenfunction.csv")}}});
    return 0;
}

int cmd_sweep(const Common& c, const std::string& param, const std::vector<double>& values, double m) {
    auto L = load(c);
    SweepOptions so;
    so.jobs = c.jobs;
    SweepTable t;
    if (param == "D") t = sweep_diffusion_rate(L.cfg, values, so);
    else if (param == "gamma") t = sweep_kernel_scaling(L.cfg, values, m, so);
    else fail(ErrorKind::config, "param", "--param must be D or gamma");
    json j = to_json(t);
    j["scenario"] = L.cfg.name;
    write_text_file(out_path(c, "sweep.csv"), sweep_csv(t));
    save_report(out_path(c, "sweep.json"), j);
    json claims = json::array();
    for (const auto& v : t.verdicts) claims.push_back({{"claim", v.claim}, {"passed", v.passed}, {"measured", v.measured}});
    print({{"parameter", param}, {"rows", t.values.size()}, {"claims", claims},
           {"files", {out_path(c, "sweep.csv"), out_path(c, "sweep.json")}}});
    return 0;
}

int cmd_criteria(const Common& c, int trials) {
    auto L = load(c);
    json j;
    j["scenario"] = L.cfg.name;
    j["criterion_I"] = attempt([&] {
        auto v = check_criterion_I(L.cfg);
        write_text_file(out_path(c, "criterion_I.csv"), refinement_csv(v));
        return to_json(v);
    });
    j["criterion_II"] = attempt([&] {
        auto v = check_criterion_II(L.cfg);
        write_text_file(out_path(c, "criterion_II.csv"), refinement_csv(v));
        return to_json(v);
    });
    j["nonexistence"] = attempt([&] { return to_json(detect_nonexistence(L.cfg)); });
    auto p = SpectralProblem::build(L.cfg);
    auto rep = solve_spectral_bound(p, SolveOptions{false, false, 0});
    j["s_A"] = rep.s_A;
    j["s_B1C"] = rep.s_B1C;
    j["existence"] = rep.existence(L.cfg.tol.root_tol);
    j["generalized_eigenvalue"] = attempt([&] { return to_json(verify_generalized_eigenvalue(p, rep)); });
    j["max_principle"] = attempt([&] { return to_json(verify_strong_max_principle(p, rep, trials)); });
    save_report(out_path(c, "criteria.json"), j);
    print(j);
    return 0;
}

int cmd_simulate(const Common& c, double t_final, std::optional<double> dt, double burn_in) {
    auto L = load(c);
    SimulationOptions so;
    so.t_final = t_final;
    so.dt = dt;
    so.burn_in = burn_in;
    auto g = estimate_growth_bound(L.cfg, so);
    auto rep = solve_spectral_bound(SpectralProblem::build(L.cfg), SolveOptions{false, false, 0});
    json j = to_json(g);
    j["scenario"] = L.cfg.name;
    j["s_A"] = rep.s_A;
    j["omega_minus_s_A"] = g.omega - rep.s_A;
    write_text_file(out_path(c, "trajectory.csv"), trajectory_csv(g.final_state));
    save_report(out_path(c, "growth.json"), j);
    print(j);
    return 0;
}

/// Invariant checks on a user config; assumption violations abort with their name.
json config_checks(ScenarioConfig cfg) {
    cfg.strict = true;
    enforce_assumptions(cfg);
    auto p = SpectralProblem::build(cfg);
    auto rep = solve_spectral_bound(p, SolveOptions{false, false, 0});
    const double rt = cfg.tol.root_tol;
    json checks = json::array();
    auto add = [&](const std::string& name, bool ok, json detail) {
        checks.push_back({{"name", name}, {"passed", ok}, {"detail", std::move(detail)}});
    };
    add("assumptions", true, to_json(validate_assumptions(cfg)));
    add("ordering_s_A_ge_s_B1C", rep.s_A >= rep.s_B1C - rt, {{"s_A", rep.s_A}, {"s_B1C", rep.s_B1C}});
    if (rep.existence(rt)) {
        add("eigenfunction_positive", rep.eigvec_age0.minCoeff() > 0.0, {{"min", rep.eigvec_age0.minCoeff()}});
        add("r_M_at_s_A", std::fabs(rep.r_M - 1.0) <= 1e-6, {{"r_M", rep.r_M}});
        if (cfg.rates.beta_cutoff_age) {
            auto g = verify_generalized_eigenvalue(p, rep);
            add("generalized_eigenvalue", g.passed, to_json(g));
        }
        auto mp = verify_strong_max_principle(p, rep, 50);
        add("maximum_principle", mp.passed, to_json(mp));
    }
    bool all = true;
    for (const auto& c : checks) all = all && c["passed"].get<bool>();
    return {{"scenario", cfg.name}, {"checks", checks}, {"all_passed", all}};
}

int cmd_verify(const Common& c, const std::string& suite, const std::vector<int>& only) {
    AcceptanceOptions opt;
    opt.jobs = c.jobs;
    json cfg_report;
    if (!c.config_path.empty()) {
        Common strict = c;
        strict.strict = true;
        auto L = load(strict);
        opt.seed = L.cfg.seed;
        cfg_report = config_checks(L.cfg);
    } else if (auto s = resolve_seed(c)) {
        opt.seed = *s;
    }
    if (suite == "quick") opt.only = quick_suite();
    else if (suite != "full") fail(ErrorKind::config, "suite", "--suite must be quick or full");
    if (!only.empty()) opt.only = std::set<int>(only.begin(), only.end());
    auto results = run_acceptance(opt, [](const CriterionResult& r) {
        std::cout << format_line(r) << std::endl;
        std::cerr << "  (" << r.seconds << " s)\n";
    });
    json j = acceptance_report(opt, suite, results);
    bool all = j["all_passed"].get<bool>();
    if (!cfg_report.is_null()) {
        j["config_checks"] = cfg_report;
        all = all && cfg_report["all_passed"].get<bool>();
        for (const auto& ch : cfg_report["checks"]) {
            std::cout << "[" << (ch["passed"].get<bool>() ? "PASS" : "FAIL") << "] config " << ch["name"].get<std::string>()
                      << "\n";
        }
    }
    j["all_passed"] = all;
    save_report(out_path(c, "verify_report.json"), j);
    std::cout << (all ? "all checks passed" : "verification FAILED") << "\n";
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral bounds and principal eigenpairs of age-structured models with nonlocal diffusion"};
    app.require_subcommand(1);
    Common com;
    auto add_common = [&](CLI::App* s, bool config_required) {
        auto* o = s->add_option("-c,--config", com.config_path, "scenario file (TOML subset or JSON)");
        if (config_required) o->required();
        s->add_option("-o,--output", com.output_dir, "output directory")->capture_default_str();
        s->add_option("--set", com.overrides, "dotted override, e.g. solver.root_tol=1e-8 (repeatable)");
        s->add_flag("--strict", com.strict, "fail on any violated assumption");
        s->add_option("--seed", com.seed, "seed; overrides SPECTRA_SEED and the config");
        s->add_option("-j,--jobs", com.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    };

    auto* solve = app.add_subcommand("solve", "spectral bound, Malthusian bound and eigenfunction");
    add_common(solve, true);

    auto* sweep = app.add_subcommand("sweep", "limit behaviour in D or in the kernel scaling");
    add_common(sweep, true);
    std::string param;
    std::vector<double> values;
    double m = 0.0;
    sweep->add_option("--param", param, "D or gamma")->required()->check(CLI::IsMember({"D", "gamma"}));
    sweep->add_option("--values", values, "comma-separated parameter values")->required()->delimiter(',');
    sweep->add_option("--m", m, "scaling exponent for gamma sweeps")->capture_default_str();

    auto* crit = app.add_subcommand("criteria", "existence criteria, nonexistence test, maximum principle");
    add_common(crit, true);
    int trials = 50;
    crit->add_option("--trials", trials, "random fields for the maximum principle")->capture_default_str();

    auto* sim = app.add_subcommand("simulate", "time-step the linear model and fit the growth rate");
    add_common(sim, true);
    double t_final = 10.0, burn_in = 0.3;
    std::optional<double> dt;
    sim->add_option("--t-final", t_final)->capture_default_str();
    sim->add_option("--dt", dt, "time step (default: age step)");
    sim->add_option("--burn-in", burn_in, "fraction of the run excluded from the fit")->capture_default_str();

    auto* ver = app.add_subcommand("verify", "acceptance suite, plus invariant checks on --config if given");
    add_common(ver, false);
    std::string suite = "full";
    std::vector<int> only;
    ver->add_option("--suite", suite, "quick or full")->capture_default_str()->check(CLI::IsMember({"quick", "full"}));
    ver->add_option("--only", only, "run only these criterion numbers")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print(error_json(Error(ErrorKind::config, "usage", e.what())));
        return exit_code_for(ErrorKind::config);
    }

    try {
        if (*solve) return cmd_solve(com);
        if (*sweep) return cmd_sweep(com, param, values, m);
        if (*crit) return cmd_criteria(com, trials);
        if (*sim) return cmd_simulate(com, t_final, dt, burn_in);
        if (*ver) return cmd_verify(com, suite, only);
    } catch (const Error& e) {
        print(error_json(e));
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        print(error_json(Error(ErrorKind::config, "io", e.what())));
        return exit_code_for(ErrorKind::config);
    } catch (const std::exception& e) {
        print(error_json(Error(ErrorKind::numerical, "internal", e.what())));
        return exit_code_for(ErrorKind::numerical);
    }
    return 2;
}
