#pragma once

#include <agespec/error.hpp>
#include <agespec/kernel.hpp>
#include <agespec/scenario.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

namespace agespec {

/// U(0, a_k) for every age node, from ∂_a U = D(K − I)U − μ(a,·)U, U(0,0) = I.
///
/// Stored as U(0,a_k) = e^{log_scale[k]} · scaled[k] with max|scaled[k]| = 1,
/// so strongly damped propagators keep their relative precision.
struct PropagatorStack {
    AgeGrid ages;
    std::vector<Eigen::MatrixXd> scaled;
    std::vector<double> log_scale;
    std::string method = "rk4";
    int step_count = 0;

    std::size_t n_a() const { return scaled.size(); }
    std::size_t n_x() const { return scaled.empty() ? 0 : static_cast<std::size_t>(scaled[0].rows()); }

    /// U(0, a_k) itself; entries may underflow for large ages.
    Eigen::MatrixXd matrix(std::size_t k) const { return std::exp(log_scale[k]) * scaled[k]; }

    void push(Eigen::MatrixXd U, double log_factor = 0.0) {
        double n = U.cwiseAbs().maxCoeff();
        if (!(n > 0.0) || !std::isfinite(n)) {
            fail(ErrorKind::numerical, "integrator_failure", "propagator vanished or diverged at age index " + std::to_string(scaled.size()));
        }
        U /= n;
        scaled.push_back(std::move(U));
        log_scale.push_back(log_factor + std::log(n));
    }
};

/// Weights e^{c}·U(0,a_k) are applied as e^{c + log_scale}·scaled; returns
/// false when the combined factor is below the double range.
inline bool propagator_weight(const PropagatorStack& stack, std::size_t k, double log_factor, double& weight) {
    double lw = log_factor + stack.log_scale[k];
    if (!(lw > -745.0)) return false;
    if (lw > 709.0) fail(ErrorKind::numerical, "overflow", "propagator weight overflows at age index " + std::to_string(k));
    weight = std::exp(lw);
    return true;
}

/// One-cell transfer matrices Φ_k with U(0, a_{k+1}) = Φ_k U(0, a_k).
///
/// Each age cell is split into RK4 substeps small enough that the scheme
/// stays positive (h·(D + μ) ≤ 1/2) and its local error on the slowest
/// decaying mode stays near root_tol. When μ is unchanged between cells the
/// previous Φ is reused.
class AgeStepper {
public:
    AgeStepper(const ScenarioConfig& cfg, const DiscreteKernelOperator& kernel)
        : rates_(cfg.rates), grid_(cfg.spatial_grid()), ages_(cfg.age_grid()), D_(cfg.effective_diffusion()),
          K_(kernel.matrix) {
        if (static_cast<std::size_t>(K_.rows()) != grid_.size()) {
            fail(ErrorKind::domain, "mismatch", "kernel matrix and spatial grid sizes differ");
        }
        const double h = ages_.step();
        double mu_max = 0.0;
        for (std::size_t k = 0; k < ages_.size(); ++k) {
            for (double x : grid_.nodes) mu_max = std::max(mu_max, rates_.mu(ages_.nodes[k], x));
        }
        const double c = D_ + mu_max;
        substeps_ = 1;
        if (c > 0.0) {
            double h_acc = 0.1 / c * std::pow(cfg.tol.root_tol / 1e-6, 0.25);
            double h_pos = 0.5 / c;
            substeps_ = std::max(1, static_cast<int>(std::ceil(h / std::min(h_acc, h_pos))));
        }
    }

    int substeps() const { return substeps_; }
    std::size_t cells() const { return ages_.size() - 1; }
    const AgeGrid& ages() const { return ages_; }

    /// Φ_k for the cell [a_k, a_{k+1}].
    const Eigen::MatrixXd& cell(std::size_t k) {
        const double a0 = ages_.nodes[k];
        const double hs = ages_.step() / substeps_;
        std::vector<Eigen::VectorXd> stage_mu;
        stage_mu.reserve(2 * static_cast<std::size_t>(substeps_) + 1);
        for (int s = 0; s <= 2 * substeps_; ++s) stage_mu.push_back(mu_at(a0 + 0.5 * hs * s));
        if (have_cached_ && stage_mu == cached_mu_) return phi_;

        bool uniform = true;
        for (const auto& m : stage_mu) uniform = uniform && m == stage_mu[0];
        const Eigen::Index n = K_.rows();
        if (uniform) {
            Eigen::MatrixXd R = rk4_step(stage_mu[0], stage_mu[0], stage_mu[0], hs);
            phi_ = R;
            for (int s = 1; s < substeps_; ++s) phi_ = R * phi_;
        } else {
            phi_ = Eigen::MatrixXd::Identity(n, n);
            for (int s = 0; s < substeps_; ++s) {
                Eigen::MatrixXd R = rk4_step(stage_mu[2 * s], stage_mu[2 * s + 1], stage_mu[2 * s + 2], hs);
                phi_ = R * phi_;
            }
        }
        cached_mu_ = std::move(stage_mu);
        have_cached_ = true;
        return phi_;
    }

private:
    Eigen::VectorXd mu_at(double a) const {
        Eigen::VectorXd m(static_cast<Eigen::Index>(grid_.size()));
        for (std::size_t i = 0; i < grid_.size(); ++i) m[static_cast<Eigen::Index>(i)] = rates_.mu(a, grid_.nodes[i]);
        return m;
    }

    // L(a)X = D·K·X − diag(D + μ(a))·X
    Eigen::MatrixXd apply_L(const Eigen::VectorXd& mu, const Eigen::MatrixXd& X) const {
        Eigen::MatrixXd out = D_ * (K_ * X);
        out -= (mu.array() + D_).matrix().asDiagonal() * X;
        return out;
    }

    Eigen::MatrixXd rk4_step(const Eigen::VectorXd& m0, const Eigen::VectorXd& mh, const Eigen::VectorXd& m1,
                             double hs) const {
        const Eigen::Index n = K_.rows();
        Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
        Eigen::MatrixXd k1 = D_ * K_;
        k1.diagonal() -= (m0.array() + D_).matrix();
        Eigen::MatrixXd k2 = apply_L(mh, I + 0.5 * hs * k1);
        Eigen::MatrixXd k3 = apply_L(mh, I + 0.5 * hs * k2);
        Eigen::MatrixXd k4 = apply_L(m1, I + hs * k3);
        return I + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    RateField rates_;
    SpatialGrid grid_;
    AgeGrid ages_;
    double D_;
    Eigen::MatrixXd K_;
    int substeps_ = 1;
    Eigen::MatrixXd phi_;
    std::vector<Eigen::VectorXd> cached_mu_;
    bool have_cached_ = false;
};

inline PropagatorStack compute_diffused_propagator(const ScenarioConfig& cfg, const DiscreteKernelOperator& kernel) {
    AgeStepper stepper(cfg, kernel);
    PropagatorStack stack;
    stack.ages = stepper.ages();
    const std::size_t na = stack.ages.size();
    const Eigen::Index n = static_cast<Eigen::Index>(kernel.size());
    stack.scaled.reserve(na);
    stack.push(Eigen::MatrixXd::Identity(n, n));
    const double mt = std::max(0.0, cfg.mu_tilde());
    for (std::size_t k = 0; k + 1 < na; ++k) {
        const Eigen::MatrixXd& phi = stepper.cell(k);
        stack.push(phi * stack.scaled.back(), stack.log_scale.back());
        double a = stack.ages.nodes[k + 1];
        // ‖U(0,a)‖_∞ ≤ e^{−μ̃a}, checked with a factor 10 of slack.
        double log_norm = stack.log_scale.back() + std::log(stack.scaled.back().cwiseAbs().rowwise().sum().maxCoeff());
        if (!std::isfinite(log_norm) || log_norm > std::log(10.0) - mt * a) {
            fail(ErrorKind::numerical, "integrator_failure",
                 "propagator exceeds its exponential bound at age " + std::to_string(a));
        }
    }
    stack.step_count = static_cast<int>((na - 1) * static_cast<std::size_t>(stepper.substeps()));
    return stack;
}

/// U(a_j, a_k) by restarting the integrator at a_j.
inline Eigen::MatrixXd restart_propagator(const ScenarioConfig& cfg, const DiscreteKernelOperator& kernel,
                                          std::size_t j, std::size_t k) {
    if (j > k) fail(ErrorKind::domain, "ordering", "restart_propagator requires j <= k");
    AgeStepper stepper(cfg, kernel);
    if (k >= stepper.ages().size()) fail(ErrorKind::domain, "index", "age index out of range");
    const Eigen::Index n = static_cast<Eigen::Index>(kernel.size());
    Eigen::MatrixXd U = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t c = j; c < k; ++c) U = stepper.cell(c) * U;
    return U;
}

inline Eigen::VectorXd apply_propagator(const PropagatorStack& stack, std::size_t a_index, const Eigen::VectorXd& v) {
    if (a_index >= stack.n_a()) fail(ErrorKind::domain, "index", "age index out of range");
    if (static_cast<std::size_t>(v.size()) != stack.n_x()) fail(ErrorKind::domain, "mismatch", "vector length differs from n_x");
    Eigen::VectorXd out = stack.scaled[a_index] * v;
    return std::exp(stack.log_scale[a_index]) * out;
}

/// Binary layout: uint64 n_a, uint64 n_x, then n_a row-major n_x×n_x blocks of float64.
inline void write_stack(const PropagatorStack& stack, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::config, "io", "cannot write '" + path + "'");
    std::uint64_t na = stack.n_a(), nx = stack.n_x();
    out.write(reinterpret_cast<const char*>(&na), sizeof na);
    out.write(reinterpret_cast<const char*>(&nx), sizeof nx);
    for (std::size_t k = 0; k < stack.n_a(); ++k) {
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = stack.matrix(k);
        out.write(reinterpret_cast<const char*>(R.data()), static_cast<std::streamsize>(sizeof(double) * nx * nx));
    }
}

/// Reads a stack dump; the age grid is taken from the caller's config.
inline PropagatorStack read_stack(const std::string& path, const AgeGrid& ages) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::config, "io", "cannot open '" + path + "'");
    std::uint64_t na = 0, nx = 0;
    in.read(reinterpret_cast<char*>(&na), sizeof na);
    in.read(reinterpret_cast<char*>(&nx), sizeof nx);
    if (!in || na != ages.size()) fail(ErrorKind::config, "io", "stack dump does not match the age grid");
    PropagatorStack stack;
    stack.ages = ages;
    for (std::uint64_t k = 0; k < na; ++k) {
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R(nx, nx);
        in.read(reinterpret_cast<char*>(R.data()), static_cast<std::streamsize>(sizeof(double) * nx * nx));
        if (!in) fail(ErrorKind::config, "io", "stack dump truncated");
        stack.push(Eigen::MatrixXd(R));
    }
    return stack;
}

}  // namespace agespec
