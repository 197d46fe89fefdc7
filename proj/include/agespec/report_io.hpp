#pragma once

#include <agespec/config_io.hpp>
#include <agespec/criteria.hpp>
#include <agespec/limits.hpp>
#include <agespec/simulate.hpp>
#include <agespec/spectral.hpp>
#include <agespec/validation.hpp>

#include <cstdio>
#include <string>

namespace agespec {

/// Fixed-format number for CSV output; identical inputs give identical bytes.
inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json vector_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline json to_json(const SpectralReport& r, double root_tol) {
    json j;
    j["s_B1C"] = r.s_B1C;
    j["s_A"] = r.s_A;
    j["lambda0_K"] = r.lambda0_K;
    j["existence"] = r.existence(root_tol);
    j["r_M"] = r.r_M;
    j["residual_M"] = r.residual_M;
    j["renewal_residual"] = r.renewal_residual;
    j["spectral_gap"] = r.spectral_gap;
    j["bisection_steps"] = r.bisection_steps;
    j["dense_fallback"] = r.dense_fallback;
    json ax = json::array();
    for (const auto& a : r.alpha_of_x) ax.push_back(a ? json(*a) : json(nullptr));
    j["alpha_of_x"] = ax;
    j["eigvec_age0"] = vector_json(r.eigvec_age0);
    json rf = json::array();
    for (const auto& [lam, rad] : r.r_F_samples) rf.push_back({{"lambda", lam}, {"r_F", rad}});
    j["r_F_samples"] = rf;
    return j;
}

/// `a,x,phi` for every grid point, ages outer.
inline std::string eigenfunction_csv(const RateTables& t, const Eigen::MatrixXd& eigfun) {
    std::string out = "a,x,phi\n";
    for (std::size_t k = 0; k < t.n_a(); ++k) {
        for (std::size_t i = 0; i < t.n_x(); ++i) {
            out += csv_num(t.agrid.nodes[k]) + "," + csv_num(t.xgrid.nodes[i]) + "," +
                   csv_num(eigfun(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i))) + "\n";
        }
    }
    return out;
}

inline json to_json(const ValidationReport& v) {
    json j;
    json checks = json::array();
    for (const auto& c : v.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    j["checks"] = checks;
    j["all_passed"] = v.all_passed();
    json scan = json::array();
    for (const auto& s : v.lambda_hat_scan) scan.push_back({{"lambda_hat", s.lambda_hat}, {"R_hat", s.R_hat}});
    j["lambda_hat_scan"] = scan;
    return j;
}

inline json to_json(const ClaimVerdict& v) {
    return {{"claim", v.claim}, {"passed", v.passed}, {"measured", v.measured}, {"threshold", v.threshold}, {"detail", v.detail}};
}

inline json to_json(const SweepTable& t) {
    json j;
    j["parameter"] = t.parameter;
    j["m"] = t.m;
    j["reference_limit"] = t.reference_limit;
    json rows = json::array();
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        rows.push_back({{"value", t.values[i]}, {"s_A", t.s_A[i]}, {"s_B1C", t.s_B1C[i]}, {"gap", t.gaps[i]}, {"status", t.row_status[i]}});
    }
    j["rows"] = rows;
    json verdicts = json::array();
    for (const auto& v : t.verdicts) verdicts.push_back(to_json(v));
    j["verdicts"] = verdicts;
    j["all_passed"] = t.all_passed();
    return j;
}

/// `param,s_A,s_B1C,verdict,gap`; the verdict column is the row status.
inline std::string sweep_csv(const SweepTable& t) {
    std::string out = "param,s_A,s_B1C,verdict,gap\n";
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        std::string status = t.row_status[i].rfind("error", 0) == 0 ? "error" : t.row_status[i];
        out += csv_num(t.values[i]) + "," + csv_num(t.s_A[i]) + "," + csv_num(t.s_B1C[i]) + "," + status + "," +
               csv_num(t.gaps[i]) + "\n";
    }
    return out;
}

inline json to_json(const IntegrabilityVerdict& v) {
    json levels = json::array();
    for (const auto& [n, I] : v.refinement_levels) levels.push_back({{"n_x", n}, {"integral", I}});
    return {{"integrand", v.integrand_name}, {"verdict", to_string(v.verdict)}, {"slope", v.slope},
            {"hotspot_index", v.hotspot}, {"hotspot_x", v.hotspot_x}, {"levels", levels}};
}

/// `level,n_x,integral`.
inline std::string refinement_csv(const IntegrabilityVerdict& v) {
    std::string out = "level,n_x,integral\n";
    for (std::size_t l = 0; l < v.refinement_levels.size(); ++l) {
        out += std::to_string(l) + "," + std::to_string(v.refinement_levels[l].first) + "," +
               csv_num(v.refinement_levels[l].second) + "\n";
    }
    return out;
}

inline json to_json(const NonexistenceReport& n) {
    json j;
    j["applicable"] = n.applicable;
    j["reason"] = n.reason;
    j["rho"] = n.rho;
    j["beta_max"] = n.beta_max;
    j["argmax_x"] = n.argmax_x;
    j["test_value"] = std::isfinite(n.test_value) ? json(n.test_value) : json("inf");
    j["predicted_nonexistence"] = n.predicted_nonexistence;
    json w = json::array();
    for (const auto& [lam, r] : n.window) w.push_back({{"lambda", lam}, {"r_F", r}});
    j["window"] = w;
    j["max_r_F"] = n.max_r_F;
    j["signature_a"] = n.signature_a;
    j["localization"] = {{"n_x_coarse", n.n_x_coarse}, {"n_x_fine", n.n_x_fine}, {"coarse", n.localization_coarse},
                         {"fine", n.localization_fine}, {"ratio", n.localization_ratio}};
    j["signature_b"] = n.signature_b;
    j["gap_coarse"] = n.gap_coarse;
    j["gap_fine"] = n.gap_fine;
    return j;
}

inline json to_json(const BoundaryCheck& b) {
    return {{"lambda", b.lambda}, {"ok", b.ok}, {"worst", b.worst}, {"worst_node", b.worst_node}};
}

inline json to_json(const GPEReport& g) {
    return {{"epsilon", g.epsilon},     {"lambda_lower", g.lambda_lower}, {"lambda_upper", g.lambda_upper},
            {"sub", to_json(g.sub)},    {"super", to_json(g.super)},      {"age_residual", g.age_residual},
            {"passed", g.passed}};
}

inline json to_json(const MaxPrincipleReport& m) {
    return {{"regime", m.regime},
            {"trials", m.trials},
            {"positive_count", m.positive_count},
            {"min_value", m.min_value},
            {"violation_exhibited", m.violation_exhibited},
            {"violation_min", m.violation_min},
            {"violation_residual", m.violation_residual},
            {"passed", m.passed},
            {"note", m.note}};
}

inline json to_json(const PropertyReport& p) {
    json checks = json::array();
    for (const auto& c : p.checks) {
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"skipped", c.skipped}, {"measured", c.measured},
                          {"bound", c.bound}, {"note", c.note}});
    }
    return {{"base_s_A", p.base_s_A}, {"max_lipschitz_ratio", p.max_lipschitz_ratio}, {"checks", checks},
            {"all_passed", p.all_passed()}};
}

inline json to_json(const GrowthEstimate& g) {
    return {{"omega", g.omega}, {"r2", g.r2}, {"confident", g.confident}, {"t_final", g.final_state.t},
            {"log_mass_final", g.final_state.log_factor}};
}

/// `t,log_mass`.
inline std::string trajectory_csv(const SimulationState& s) {
    std::string out = "t,log_mass\n";
    for (const auto& [t, y] : s.log_mass_history) out += csv_num(t) + "," + csv_num(y) + "\n";
    return out;
}

inline json error_json(const Error& e) {
    return {{"error", {{"kind", to_string(e.kind())}, {"code", e.code()}, {"message", e.what()}}}};
}

inline void save_report(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace agespec
