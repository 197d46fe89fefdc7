#pragma once

#include <agespec/error.hpp>
#include <agespec/spectral.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

namespace agespec {

/// Density u(t, a_k, x_i) kept at unit discrete L¹ mass; the true mass is
/// e^{log_factor}.
struct SimulationState {
    double t = 0.0;
    Eigen::MatrixXd u;  ///< n_a × n_x
    double log_factor = 0.0;
    std::vector<std::pair<double, double>> log_mass_history;  ///< (t, log total mass)

    double total_mass() const { return std::exp(log_factor); }
};

/// Discrete L¹ norm Σ_k Σ_i w_k w_i |u_ki|.
inline double l1_mass(const RateTables& t, const Eigen::MatrixXd& u) {
    Eigen::Map<const Eigen::VectorXd> wa(t.agrid.quad_weights.data(), static_cast<Eigen::Index>(t.n_a()));
    Eigen::Map<const Eigen::VectorXd> wx(t.xgrid.quad_weights.data(), static_cast<Eigen::Index>(t.n_x()));
    return wa.transpose() * u.cwiseAbs() * wx;
}

/// Fixed pieces of the linear model on one grid.
class LinearModel {
public:
    explicit LinearModel(const ScenarioConfig& cfg)
        : tables_(tabulate_rates(cfg)),
          kernel_(build_kernel_matrix(cfg.kernel, tables_.xgrid)),
          D_(cfg.effective_diffusion()) {
        Kt_ = kernel_.matrix.transpose();
    }

    const RateTables& tables() const { return tables_; }
    double age_step() const { return tables_.agrid.step(); }

    /// New state with log mass initialized; rejects the zero field.
    SimulationState initial_state(const Eigen::MatrixXd& u0) const {
        if (u0.rows() != static_cast<Eigen::Index>(tables_.n_a()) || u0.cols() != static_cast<Eigen::Index>(tables_.n_x())) {
            fail(ErrorKind::domain, "shape", "initial field must be n_a x n_x");
        }
        if (u0.minCoeff() < -1e-12) fail(ErrorKind::domain, "negative_density", "initial field has negative entries");
        double m = l1_mass(tables_, u0);
        if (!(m > 0.0)) fail(ErrorKind::domain, "trivial_trajectory", "trivial trajectory: zero initial data");
        SimulationState s;
        s.u = u0 / m;
        s.log_factor = std::log(m);
        s.log_mass_history.emplace_back(0.0, s.log_factor);
        return s;
    }

    SimulationState step(const SimulationState& in, double dt) const {
        SimulationState out = in;
        advance(out, dt);
        return out;
    }

    /// One Lie-split step in place: age transport with survival, nonlocal gain, renewal.
    void advance(SimulationState& s, double dt) const {
        const double h = age_step();
        if (!(dt > 0.0) || dt > h * (1.0 + 1e-12)) {
            fail(ErrorKind::domain, "cfl", "time step must satisfy 0 < dt <= h_a");
        }
        const auto na = static_cast<Eigen::Index>(tables_.n_a());
        const double c = std::min(1.0, dt / h);
        const Eigen::MatrixXd prev = std::move(s.u);
        Eigen::MatrixXd& u = s.u;
        u.resize(prev.rows(), prev.cols());

        // Transport: an exact shift when dt = h_a, upwind otherwise. The
        // survival factor uses the exact hazard over the traversed cell.
        for (Eigen::Index k = na - 1; k >= 1; --k) {
            Eigen::ArrayXd hz = (tables_.hazard.row(k) - tables_.hazard.row(k - 1)).transpose().array();
            Eigen::ArrayXd survive = (-(hz * c) - D_ * dt).exp();
            if (c == 1.0) {
                u.row(k) = (prev.row(k - 1).transpose().array() * survive).transpose();
            } else {
                Eigen::ArrayXd mu_k = tables_.mu.row(k).transpose().array();
                Eigen::ArrayXd stay = (-(mu_k + D_) * dt).exp();
                u.row(k) = ((1.0 - c) * prev.row(k).transpose().array() * stay +
                            c * prev.row(k - 1).transpose().array() * survive).transpose();
            }
        }
        {
            Eigen::ArrayXd mu0 = tables_.mu.row(0).transpose().array();
            u.row(0) = ((1.0 - c) * prev.row(0).transpose().array() * (-(mu0 + D_) * dt).exp()).transpose();
        }

        // Nonlocal gain, explicit.
        if (D_ > 0.0) u += (dt * D_) * (u * Kt_);

        // Renewal, implicit in the age-0 row.
        Eigen::VectorXd births = Eigen::VectorXd::Zero(u.cols());
        for (Eigen::Index k = 1; k < na; ++k) {
            births += tables_.agrid.quad_weights[static_cast<std::size_t>(k)] *
                      tables_.beta.row(k).transpose().cwiseProduct(u.row(k).transpose());
        }
        Eigen::ArrayXd self = 1.0 - tables_.agrid.quad_weights[0] * tables_.beta.row(0).transpose().array();
        if ((self <= 0.0).any()) fail(ErrorKind::numerical, "renewal", "age step too coarse for the implicit renewal");
        u.row(0) = (births.array() / self).transpose();

        if (u.minCoeff() < -1e-12) fail(ErrorKind::numerical, "negative_density", "step produced negative density");
        double m = l1_mass(tables_, u);
        if (!(m > 0.0) || !std::isfinite(m)) fail(ErrorKind::numerical, "mass", "mass vanished or overflowed");
        u /= m;
        s.t += dt;
        s.log_factor += std::log(m);
        s.log_mass_history.emplace_back(s.t, s.log_factor);
    }

private:
    RateTables tables_;
    DiscreteKernelOperator kernel_;
    double D_;
    Eigen::MatrixXd Kt_;
};

inline SimulationState step_linear_model(const SimulationState& state, const ScenarioConfig& cfg, double dt) {
    return LinearModel(cfg).step(state, dt);
}

struct GrowthEstimate {
    double omega = 0.0;
    double r2 = 0.0;
    bool confident = false;  ///< r² ≥ 0.999
    SimulationState final_state;
};

struct SimulationOptions {
    double t_final = 10.0;
    std::optional<double> dt;  ///< defaults to h_a
    double burn_in = 0.3;
    std::optional<Eigen::MatrixXd> initial;  ///< defaults to u ≡ 1
};

/// Least squares slope and r² of log mass against t after the burn-in.
inline std::pair<double, double> fit_growth(const std::vector<std::pair<double, double>>& hist, double t_final,
                                            double burn_in) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    double n = 0;
    for (const auto& [t, y] : hist) {
        if (t < burn_in * t_final) continue;
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
        syy += y * y;
        n += 1;
    }
    if (n < 3) fail(ErrorKind::domain, "history", "too few samples after burn-in");
    double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
    double slope = cov / vx;
    double r2 = vy > 0.0 ? cov * cov / (vx * vy) : 1.0;
    return {slope, r2};
}

inline GrowthEstimate estimate_growth_bound(const ScenarioConfig& cfg, const SimulationOptions& opt = {}) {
    LinearModel model(cfg);
    const auto& t = model.tables();
    Eigen::MatrixXd u0 = opt.initial ? *opt.initial
                                     : Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(t.n_a()), static_cast<Eigen::Index>(t.n_x()));
    double dt = opt.dt.value_or(model.age_step());
    SimulationState s = model.initial_state(u0);
    auto steps = static_cast<long>(std::ceil(opt.t_final / dt - 1e-9));
    for (long j = 0; j < steps; ++j) model.advance(s, dt);
    GrowthEstimate g;
    auto [omega, r2] = fit_growth(s.log_mass_history, opt.t_final, opt.burn_in);
    g.omega = omega;
    g.r2 = r2;
    g.confident = r2 >= 0.999;
    g.final_state = std::move(s);
    return g;
}

}  // namespace agespec
