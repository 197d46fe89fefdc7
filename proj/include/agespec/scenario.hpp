#pragma once

#include <agespec/error.hpp>
#include <agespec/grid.hpp>
#include <agespec/kernel.hpp>
#include <agespec/rates.hpp>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace agespec {

inline std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

struct Tolerances {
    double root_tol = 1e-6;
    double power_iter_tol = 1e-8;
    int max_iters = 20000;
};

struct DomainSpec {
    double lower = -1.0;
    double upper = 1.0;
    std::size_t n_x = 200;
};

struct AgeSpec {
    std::optional<double> horizon;  ///< â; empty means infinite
    std::size_t n_a = 200;
};

/// A complete problem instance.
struct ScenarioConfig {
    std::string name = "scenario";
    DomainSpec domain;
    AgeSpec age;
    KernelSpec kernel = KernelSpec::epanechnikov_kernel(1.0);
    RateField rates;
    double diffusion_rate = 1.0;
    Tolerances tol;
    std::uint64_t seed = 42;
    bool strict = false;

    SpatialGrid spatial_grid() const { return SpatialGrid::uniform(domain.lower, domain.upper, domain.n_x); }

    /// D/γ^m, the diffusion coefficient actually multiplying (K − I).
    double effective_diffusion() const { return diffusion_rate / std::pow(kernel.gamma, kernel.m); }

    /// μ̃: the declared lower bound, otherwise the minimum of μ over a dense
    /// probe of (age, x), refined in x by Brent's method.
    double mu_tilde() const {
        if (rates.mu_lower_bound) return *rates.mu_lower_bound;
        SpatialGrid g = spatial_grid();
        std::vector<double> xs = g.nodes;
        const int dense = 2049;
        const double dx = (domain.upper - domain.lower) / (dense - 1);
        for (int i = 0; i < dense; ++i) xs.push_back(domain.lower + dx * i);
        double span = age_span_hint();
        double lo = std::numeric_limits<double>::infinity(), a_lo = 0.0, x_lo = 0.0;
        const int probes = 257;
        for (int k = 0; k < probes; ++k) {
            double a = span * k / (probes - 1);
            for (double x : xs) {
                double v = rates.mu(a, x);
                if (v < lo) lo = v, a_lo = a, x_lo = x;
            }
        }
        if (std::isfinite(lo)) {
            auto f = [&](double x) { return rates.mu(a_lo, x); };
            auto r = boost::math::tools::brent_find_minima(f, std::max(domain.lower, x_lo - dx),
                                                           std::min(domain.upper, x_lo + dx), 52);
            lo = std::min(lo, r.second);
        }
        return lo;
    }

    AgeGrid age_grid() const {
        if (rates.beta_cutoff_age) {
            double a2 = *rates.beta_cutoff_age;
            if (!(a2 > 0.0)) fail(ErrorKind::config, "age", "rates.beta_cutoff_age must be positive");
            if (age.horizon && a2 > *age.horizon) {
                fail(ErrorKind::config, "age", "rates.beta_cutoff_age exceeds age.horizon");
            }
            return AgeGrid::uniform(a2, age.n_a);
        }
        if (age.horizon) return AgeGrid::uniform(*age.horizon, age.n_a);
        double mt = mu_tilde();
        if (!(mt > tol.root_tol)) {
            fail(ErrorKind::config, "mu_lower_bound",
                 "inf mu = " + fmt_g(mt) + " is not positive; an infinite age horizon needs a positive lower bound");
        }
        double a_max = std::log(10.0 / tol.root_tol) / mt * (1.0 + 1e-9);
        AgeGrid g = AgeGrid::uniform(a_max, age.n_a);
        g.is_truncated = true;
        g.truncation_tail_bound = std::exp(-mt * a_max);
        return g;
    }

private:
    double age_span_hint() const {
        if (rates.beta_cutoff_age) return *rates.beta_cutoff_age;
        if (age.horizon) return *age.horizon;
        return 50.0;
    }
};

/// Rates sampled once on the (age × space) grid.
///
/// hazard(k, i) is ∫₀^{a_k} μ(s, x_i) ds. At the cutoff node a = a₂ the birth
/// table holds the left limit of β so that age quadrature sees the integrand
/// on the closed reproductive window.
struct RateTables {
    SpatialGrid xgrid;
    AgeGrid agrid;
    Eigen::MatrixXd beta;    // n_a × n_x
    Eigen::MatrixXd mu;      // n_a × n_x
    Eigen::MatrixXd hazard;  // n_a × n_x
    std::vector<double> beta_lo, beta_hi, mu_lo, mu_hi;  // envelopes at age nodes
    std::vector<double> hazard_lo, hazard_hi;            // cumulative envelopes ∫μ̲, ∫μ̄
    double mu_tilde = 0.0;
    double mu_max = 0.0;

    std::size_t n_a() const { return agrid.size(); }
    std::size_t n_x() const { return xgrid.size(); }

    double survival(std::size_t k0, std::size_t k1, std::size_t i) const {
        return std::exp(-(hazard(static_cast<Eigen::Index>(k1), static_cast<Eigen::Index>(i)) -
                          hazard(static_cast<Eigen::Index>(k0), static_cast<Eigen::Index>(i))));
    }

    /// True when β and μ agree across all spatial nodes at every age node.
    bool x_independent(double rel = 1e-12) const {
        for (Eigen::Index k = 0; k < beta.rows(); ++k) {
            double bs = std::max(1.0, beta.row(k).cwiseAbs().maxCoeff());
            double ms = std::max(1.0, mu.row(k).cwiseAbs().maxCoeff());
            if (beta.row(k).maxCoeff() - beta.row(k).minCoeff() > rel * bs) return false;
            if (mu.row(k).maxCoeff() - mu.row(k).minCoeff() > rel * ms) return false;
        }
        return true;
    }
};

inline RateTables tabulate_rates(const ScenarioConfig& cfg) {
    RateTables t;
    t.xgrid = cfg.spatial_grid();
    t.agrid = cfg.age_grid();
    const std::size_t na = t.agrid.size(), nx = t.xgrid.size();
    const auto& rates = cfg.rates;
    t.beta.resize(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(nx));
    t.mu.resize(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(nx));
    t.hazard.resize(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(nx));
    const auto& rule = cell_rule();
    const double h = t.agrid.step();
    t.hazard_lo.assign(na, 0.0);
    t.hazard_hi.assign(na, 0.0);
    std::vector<double> running(nx, 0.0);
    double run_lo = 0.0, run_hi = 0.0;
    for (std::size_t k = 0; k < na; ++k) {
        double a = t.agrid.nodes[k];
        bool at_cutoff = rates.beta_cutoff_age && k + 1 == na && std::fabs(a - *rates.beta_cutoff_age) < 1e-12 * (1 + a);
        if (k > 0) {
            double a0 = t.agrid.nodes[k - 1];
            double cell_lo = 0.0, cell_hi = 0.0;
            for (int q = 0; q < 3; ++q) {
                double s = a0 + h * rule.nodes[q];
                double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                for (std::size_t i = 0; i < nx; ++i) {
                    double m = rates.mu(s, t.xgrid.nodes[i]);
                    running[i] += h * rule.weights[q] * m;
                    lo = std::min(lo, m);
                    hi = std::max(hi, m);
                }
                cell_lo += h * rule.weights[q] * lo;
                cell_hi += h * rule.weights[q] * hi;
            }
            run_lo += cell_lo;
            run_hi += cell_hi;
        }
        t.hazard_lo[k] = run_lo;
        t.hazard_hi[k] = run_hi;
        for (std::size_t i = 0; i < nx; ++i) {
            double x = t.xgrid.nodes[i];
            auto K = static_cast<Eigen::Index>(k);
            auto I = static_cast<Eigen::Index>(i);
            t.beta(K, I) = at_cutoff ? rates.beta_uncut(a, x) : rates.beta(a, x);
            t.mu(K, I) = rates.mu(a, x);
            t.hazard(K, I) = running[i];
        }
    }
    t.beta_lo.resize(na);
    t.beta_hi.resize(na);
    t.mu_lo.resize(na);
    t.mu_hi.resize(na);
    for (std::size_t k = 0; k < na; ++k) {
        auto K = static_cast<Eigen::Index>(k);
        t.beta_lo[k] = t.beta.row(K).minCoeff();
        t.beta_hi[k] = t.beta.row(K).maxCoeff();
        t.mu_lo[k] = t.mu.row(K).minCoeff();
        t.mu_hi[k] = t.mu.row(K).maxCoeff();
    }
    t.mu_tilde = cfg.mu_tilde();
    t.mu_max = *std::max_element(t.mu_hi.begin(), t.mu_hi.end());
    return t;
}

}  // namespace agespec
