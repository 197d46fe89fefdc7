#pragma once

#include <agespec/error.hpp>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace agespec {

/// Composite trapezoid weights for n uniform nodes with spacing h.
inline std::vector<double> trapezoid_weights(std::size_t n, double h) {
    std::vector<double> w(n, h);
    if (n == 1) {
        w[0] = 0.0;
        return w;
    }
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
    return w;
}

/// Composite Simpson weights; an odd interval count closes with the 3/8 rule
/// on the last three intervals. Falls back to trapezoid below four nodes.
inline std::vector<double> simpson_weights(std::size_t n, double h) {
    if (n < 4) return trapezoid_weights(n, h);
    std::vector<double> w(n, 0.0);
    std::size_t intervals = n - 1;
    std::size_t simpson_end = (intervals % 2 == 0) ? intervals : intervals - 3;
    for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if (simpson_end != intervals) {
        std::size_t i = simpson_end;
        w[i] += 3.0 * h / 8.0;
        w[i + 1] += 9.0 * h / 8.0;
        w[i + 2] += 9.0 * h / 8.0;
        w[i + 3] += 3.0 * h / 8.0;
    }
    return w;
}

/// Uniform nodes on [lower, upper] with trapezoid weights.
struct SpatialGrid {
    double lower = -1.0;
    double upper = 1.0;
    std::vector<double> nodes;
    std::vector<double> quad_weights;

    std::size_t size() const noexcept { return nodes.size(); }
    double step() const { return (upper - lower) / static_cast<double>(nodes.size() - 1); }
    double length() const noexcept { return upper - lower; }

    static SpatialGrid uniform(double lower, double upper, std::size_t n_x) {
        if (!(upper > lower)) {
            fail(ErrorKind::config, "domain", "domain.upper must exceed domain.lower");
        }
        if (n_x < 3) fail(ErrorKind::config, "domain", "domain.n_x must be at least 3");
        SpatialGrid g;
        g.lower = lower;
        g.upper = upper;
        g.nodes.resize(n_x);
        double h = (upper - lower) / static_cast<double>(n_x - 1);
        for (std::size_t i = 0; i < n_x; ++i) g.nodes[i] = lower + h * static_cast<double>(i);
        g.nodes.back() = upper;
        g.quad_weights = trapezoid_weights(n_x, h);
        return g;
    }

    /// Index of the node closest to x.
    std::size_t nearest(double x) const {
        double t = (x - lower) / step();
        long k = std::lround(t);
        if (k < 0) k = 0;
        if (k >= static_cast<long>(size())) k = static_cast<long>(size()) - 1;
        return static_cast<std::size_t>(k);
    }
};

/// Uniform age nodes on [0, a_max]. Weights are composite Simpson.
struct AgeGrid {
    double a_max = 1.0;
    std::vector<double> nodes;
    std::vector<double> quad_weights;
    bool is_truncated = false;
    double truncation_tail_bound = 0.0;

    std::size_t size() const noexcept { return nodes.size(); }
    double step() const { return a_max / static_cast<double>(nodes.size() - 1); }

    static AgeGrid uniform(double a_max, std::size_t n_a) {
        if (!(a_max > 0.0) || !std::isfinite(a_max)) {
            fail(ErrorKind::config, "age", "age horizon must be positive and finite after truncation");
        }
        if (n_a < 3) fail(ErrorKind::config, "age", "age.n_a must be at least 3");
        AgeGrid g;
        g.a_max = a_max;
        g.nodes.resize(n_a);
        double h = a_max / static_cast<double>(n_a - 1);
        for (std::size_t k = 0; k < n_a; ++k) g.nodes[k] = h * static_cast<double>(k);
        g.nodes.back() = a_max;
        g.quad_weights = simpson_weights(n_a, h);
        return g;
    }
};

}  // namespace agespec
