#pragma once

#include <agespec/error.hpp>
#include <agespec/scenario.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace agespec {

struct AssumptionCheck {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct LambdaHatSample {
    double lambda_hat;
    double R_hat;
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;
    std::vector<LambdaHatSample> lambda_hat_scan;  ///< filled only for a truncated infinite horizon
    bool R_hat_above_one = true;

    bool all_passed() const {
        for (const auto& c : checks) if (!c.passed) return false;
        return true;
    }
    const AssumptionCheck* first_failure() const {
        for (const auto& c : checks) if (!c.passed) return &c;
        return nullptr;
    }
};

/// R̂ = ∫ β̲(a) e^{−(λ̂+D)a} π̄(a) da on the age grid.
inline double lambda_hat_ratio(const RateTables& t, double diffusion, double lambda_hat) {
    double sum = 0.0;
    for (std::size_t k = 0; k < t.n_a(); ++k) {
        double a = t.agrid.nodes[k];
        sum += t.agrid.quad_weights[k] * t.beta_lo[k] * std::exp(-(lambda_hat + diffusion) * a - t.hazard_hi[k]);
    }
    return sum;
}

/// Mass of J_γ by adaptive quadrature, independent of the grid.
inline double kernel_mass(const KernelSpec& k) {
    using boost::math::quadrature::gauss_kronrod;
    auto f = [&](double z) { return k(z); };
    std::vector<double> breaks{0.0};
    if (k.profile == KernelProfile::custom) {
        for (std::size_t i = 1; i < k.table_z.size(); ++i) breaks.push_back(k.table_z[i] * k.gamma);
    } else {
        breaks.push_back(k.support());
    }
    double half = 0.0;
    for (std::size_t i = 1; i < breaks.size(); ++i) {
        half += gauss_kronrod<double, 31>::integrate(f, breaks[i - 1], breaks[i], 15, 1e-14);
    }
    return 2.0 * half;
}

inline ValidationReport validate_assumptions(const ScenarioConfig& cfg) {
    ValidationReport rep;
    auto add = [&](std::string name, bool ok, std::string detail) {
        rep.checks.push_back({std::move(name), ok, std::move(detail)});
    };

    // Kernel: nonnegative, supported in the scaled ball, positive at 0, unit mass.
    {
        const auto& k = cfg.kernel;
        bool ok = k(0.0) > 0.0;
        std::string detail = ok ? "" : "J(0) is not positive";
        double R = k.support();
        for (int s = -400; s <= 400 && ok; ++s) {
            double z = 1.5 * R * s / 400.0;
            double v = k(z);
            if (!(v >= 0.0) || !std::isfinite(v)) {
                ok = false;
                detail = "J negative or non-finite at z=" + std::to_string(z);
            } else if (std::fabs(z) > R * (1 + 1e-9) && v != 0.0) {
                ok = false;
                detail = "J nonzero outside its support at z=" + std::to_string(z);
            }
        }
        double mass = kernel_mass(k);
        if (ok && std::fabs(mass - 1.0) > 1e-10) {
            ok = false;
            detail = "kernel mass " + std::to_string(mass) + " differs from 1";
        }
        if (ok) detail = "mass " + std::to_string(mass);
        add("kernel", ok, detail);
    }

    add("diffusion_rate", cfg.diffusion_rate > 0.0,
        cfg.diffusion_rate > 0.0 ? "" : "diffusion_rate must be positive");

    RateTables t;
    try {
        t = tabulate_rates(cfg);
    } catch (const Error& e) {
        add(e.code() == "mu_lower_bound" ? "mu_lower_bound" : "age_grid", false, e.what());
        return rep;
    }

    // Non-finite samples are malformed input, not a violated hypothesis.
    for (Eigen::Index k = 0; k < t.beta.rows(); ++k) {
        for (Eigen::Index i = 0; i < t.beta.cols(); ++i) {
            if (!std::isfinite(t.beta(k, i)) || !std::isfinite(t.mu(k, i))) {
                fail(ErrorKind::config, "rate_table",
                     "non-finite rate at age index " + std::to_string(k) + ", x index " + std::to_string(i));
            }
        }
    }

    {
        bool ok = true;
        std::string detail;
        for (Eigen::Index k = 0; k < t.beta.rows() && ok; ++k) {
            for (Eigen::Index i = 0; i < t.beta.cols(); ++i) {
                if (t.beta(k, i) < 0.0) {
                    ok = false;
                    detail = "beta < 0 at age index " + std::to_string(k) + ", x index " + std::to_string(i);
                    break;
                }
            }
        }
        add("beta_nonnegative", ok, detail);
    }

    {
        double mt = t.mu_tilde;
        bool ok = mt > cfg.tol.root_tol;
        std::string detail = ok ? "" : "inf mu = " + fmt_g(mt) + " is not positive";
        for (std::size_t k = 0; k < t.n_a() && ok; ++k) {
            if (t.mu_lo[k] < mt * (1 - 1e-12)) {
                ok = false;
                auto row = t.mu.row(static_cast<Eigen::Index>(k));
                Eigen::Index arg;
                row.minCoeff(&arg);
                detail = "mu below mu_lower_bound at age index " + std::to_string(k) + ", x index " +
                         std::to_string(arg);
            }
        }
        if (ok) detail = "mu_tilde " + std::to_string(mt);
        add("mu_lower_bound", ok, detail);
    }

    add("mu_max_finite", std::isfinite(t.mu_max), "mu_max " + std::to_string(t.mu_max));

    if (cfg.rates.beta_cutoff_age) {
        double a2 = *cfg.rates.beta_cutoff_age;
        bool ok = true;
        std::string detail;
        for (double x : t.xgrid.nodes) {
            for (double a : {a2, a2 + 1.0, a2 + 10.0}) {
                if (cfg.rates.beta(a, x) != 0.0) {
                    ok = false;
                    detail = "beta nonzero beyond the cutoff at x=" + std::to_string(x);
                }
            }
        }
        add("beta_cutoff", ok, detail);
    }

    const auto ag = t.agrid;
    if (ag.is_truncated) {
        bool ok = ag.truncation_tail_bound < cfg.tol.root_tol;
        add("truncation", ok, "tail bound " + std::to_string(ag.truncation_tail_bound));

        // Assumption on λ̂: R̂ is decreasing in λ̂, so scan from the edge of V.
        const double D = cfg.effective_diffusion();
        const double edge = -D - t.mu_tilde;
        double best = 0.0;
        for (double off : {1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0}) {
            double lh = edge + off;
            double r = lambda_hat_ratio(t, D, lh);
            rep.lambda_hat_scan.push_back({lh, r});
            best = std::max(best, r);
        }
        rep.lambda_hat_scan.push_back({0.0, lambda_hat_ratio(t, D, 0.0)});
        rep.R_hat_above_one = best > 1.0;
        std::ostringstream d;
        d << "max R_hat " << best;
        add("lambda_hat", rep.R_hat_above_one, d.str());
    }
    return rep;
}

/// Throws on failure when the config is strict, otherwise returns the warnings.
inline std::vector<std::string> enforce_assumptions(const ScenarioConfig& cfg) {
    ValidationReport rep = validate_assumptions(cfg);
    std::vector<std::string> warnings;
    for (const auto& c : rep.checks) {
        if (c.passed) continue;
        std::string msg = "assumption " + c.name + " violated: " + c.detail;
        if (cfg.strict) fail(ErrorKind::verification, c.name, msg);
        warnings.push_back(msg);
    }
    return warnings;
}

}  // namespace agespec
