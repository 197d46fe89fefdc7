#pragma once

#include <agespec/error.hpp>
#include <agespec/grid.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace agespec {

enum class KernelProfile { epanechnikov, constant, custom };

inline const char* to_string(KernelProfile p) {
    switch (p) {
        case KernelProfile::epanechnikov: return "epanechnikov";
        case KernelProfile::constant: return "constant";
        case KernelProfile::custom: return "custom";
    }
    return "unknown";
}

/// Dispersal kernel J and its scaled version J_γ(z) = J(z/γ)/γ.
///
/// The custom profile is a symmetric table of (z, J) with z ≥ 0, linearly
/// interpolated; its last z is the radius.
struct KernelSpec {
    KernelProfile profile = KernelProfile::epanechnikov;
    double radius = 1.0;
    double gamma = 1.0;
    double m = 0.0;
    std::vector<double> table_z;
    std::vector<double> table_j;
    double normalization_constant = 0.75;

    /// Profile shape before normalization.
    double shape(double z) const {
        double t = std::fabs(z);
        switch (profile) {
            case KernelProfile::epanechnikov: {
                double u = t / radius;
                return u < 1.0 ? 1.0 - u * u : 0.0;
            }
            case KernelProfile::constant:
                return t <= radius * (1.0 + 1e-12) ? 1.0 : 0.0;
            case KernelProfile::custom: {
                if (t > table_z.back()) return 0.0;
                auto it = std::upper_bound(table_z.begin(), table_z.end(), t);
                if (it == table_z.end()) return table_j.back();
                std::size_t k = static_cast<std::size_t>(it - table_z.begin());
                if (k == 0) return table_j.front();
                double z0 = table_z[k - 1], z1 = table_z[k];
                double s = (t - z0) / (z1 - z0);
                return (1.0 - s) * table_j[k - 1] + s * table_j[k];
            }
        }
        return 0.0;
    }

    /// Unscaled normalized kernel J.
    double base(double z) const { return normalization_constant * shape(z); }

    /// Scaled kernel J_γ.
    double operator()(double z) const { return base(z / gamma) / gamma; }

    double support() const { return radius * gamma; }

    /// ‖J_γ‖_∞ (all profiles peak at the origin).
    double sup_norm() const {
        if (profile == KernelProfile::custom) {
            double peak = *std::max_element(table_j.begin(), table_j.end());
            return normalization_constant * peak / gamma;
        }
        return normalization_constant / gamma;
    }

    /// Fills in normalization_constant so that ∫J = 1.
    void normalize() {
        switch (profile) {
            case KernelProfile::epanechnikov: normalization_constant = 3.0 / (4.0 * radius); break;
            case KernelProfile::constant: normalization_constant = 1.0 / (2.0 * radius); break;
            case KernelProfile::custom: {
                double integral = 0.0;
                for (std::size_t k = 1; k < table_z.size(); ++k) {
                    integral += 0.5 * (table_j[k] + table_j[k - 1]) * (table_z[k] - table_z[k - 1]);
                }
                if (!(integral > 0.0)) {
                    fail(ErrorKind::config, "kernel", "custom kernel table has zero mass");
                }
                normalization_constant = 1.0 / (2.0 * integral);
                break;
            }
        }
    }

    void check() const {
        if (!(radius > 0.0)) fail(ErrorKind::config, "kernel", "kernel.radius must be positive");
        if (!(gamma > 0.0)) fail(ErrorKind::config, "kernel", "kernel.gamma must be positive");
        if (!(m >= 0.0)) fail(ErrorKind::config, "kernel", "kernel.m must be nonnegative");
        if (profile == KernelProfile::custom) {
            if (table_z.size() < 2 || table_z.size() != table_j.size()) {
                fail(ErrorKind::config, "kernel", "custom kernel table needs at least two (z,J) rows");
            }
            if (table_z.front() != 0.0) {
                fail(ErrorKind::config, "kernel", "custom kernel table must start at z=0");
            }
            for (std::size_t k = 0; k < table_z.size(); ++k) {
                if (!std::isfinite(table_z[k]) || !std::isfinite(table_j[k]) || table_j[k] < 0.0) {
                    fail(ErrorKind::config, "kernel",
                         "custom kernel table row " + std::to_string(k) + " is negative or non-finite");
                }
                if (k > 0 && !(table_z[k] > table_z[k - 1])) {
                    fail(ErrorKind::config, "kernel",
                         "custom kernel table z must increase (row " + std::to_string(k) + ")");
                }
            }
            if (!(table_j.front() > 0.0)) {
                fail(ErrorKind::config, "kernel", "custom kernel must be positive at 0");
            }
        }
    }

    static KernelSpec epanechnikov_kernel(double radius, double gamma = 1.0, double m = 0.0) {
        KernelSpec k;
        k.profile = KernelProfile::epanechnikov;
        k.radius = radius;
        k.gamma = gamma;
        k.m = m;
        k.normalize();
        return k;
    }

    static KernelSpec constant_kernel(double radius, double gamma = 1.0, double m = 0.0) {
        KernelSpec k;
        k.profile = KernelProfile::constant;
        k.radius = radius;
        k.gamma = gamma;
        k.m = m;
        k.normalize();
        return k;
    }

    static KernelSpec custom_kernel(std::vector<double> z, std::vector<double> j, double gamma = 1.0,
                                    double m = 0.0) {
        KernelSpec k;
        k.profile = KernelProfile::custom;
        k.table_z = std::move(z);
        k.table_j = std::move(j);
        k.radius = k.table_z.empty() ? 1.0 : k.table_z.back();
        k.gamma = gamma;
        k.m = m;
        k.check();
        k.normalize();
        return k;
    }
};

/// Nyström matrix of K_{γ,Ω}: entry (i,j) = J_γ(x_i − x_j)·w_j.
struct DiscreteKernelOperator {
    Eigen::MatrixXd matrix;
    /// Factor applied so that the lattice sum h·Σ_k J_γ(kh) equals 1.
    double renormalization = 1.0;

    std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
    Eigen::VectorXd apply(const Eigen::VectorXd& f) const { return matrix * f; }
};

/// Discrete mass h·Σ_k J_γ(kh) over the infinite lattice, trapezoid-closed at the support ends.
inline double lattice_mass(const KernelSpec& kernel, double h) {
    double support = kernel.support();
    long kmax = static_cast<long>(std::floor(support / h * (1.0 + 1e-12)));
    double sum = kernel(0.0);
    for (long k = 1; k <= kmax; ++k) {
        double z = h * static_cast<double>(k);
        double value = kernel(z);
        bool at_end = std::fabs(z - support) <= 1e-9 * h;
        sum += 2.0 * (at_end ? 0.5 : 1.0) * value;
    }
    return h * sum;
}

inline DiscreteKernelOperator build_kernel_matrix(const KernelSpec& kernel, const SpatialGrid& grid) {
    kernel.check();
    const std::size_t n = grid.size();
    const double h = grid.step();
    if (kernel.support() < h) {
        fail(ErrorKind::domain, "resolution",
             "kernel support " + std::to_string(kernel.support()) + " is smaller than the grid step " +
                 std::to_string(h) + "; increase domain.n_x");
    }
    DiscreteKernelOperator op;
    op.renormalization = 1.0 / lattice_mass(kernel, h);
    const double support = kernel.support();
    // J_γ(x_i − x_j) depends on |i − j| only on a uniform grid. A lattice point
    // sitting exactly on the support edge closes the integration interval and
    // takes a half weight, as the grid ends do.
    std::vector<double> by_offset(n);
    std::vector<bool> on_edge(n);
    for (std::size_t d = 0; d < n; ++d) {
        double z = h * static_cast<double>(d);
        by_offset[d] = op.renormalization * kernel(z);
        on_edge[d] = d > 0 && std::fabs(z - support) <= 1e-9 * h;
    }
    op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t d = i > j ? i - j : j - i;
            double w = on_edge[d] ? 0.5 * h : grid.quad_weights[j];
            op.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = by_offset[d] * w;
        }
    }
    return op;
}

}  // namespace agespec
