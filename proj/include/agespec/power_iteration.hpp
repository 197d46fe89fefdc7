#pragma once

#include <agespec/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace agespec {

struct PowerResult {
    double radius = 0.0;
    Eigen::VectorXd vector;  ///< nonnegative, ‖·‖_∞ = 1
    int iterations = 0;
    bool dense_fallback = false;
};

/// Thrown when power iteration runs out of iterations.
class PowerIterationFailure : public Error {
public:
    PowerIterationFailure(const std::string& msg, Eigen::VectorXd last, double estimate, bool oscillating)
        : Error(ErrorKind::numerical, "nonconvergence", msg),
          last_iterate(std::move(last)),
          last_estimate(estimate),
          oscillating(oscillating) {}

    Eigen::VectorXd last_iterate;
    double last_estimate;
    bool oscillating;
};

/// Dominant eigenvalue of a nonnegative operator by power iteration.
///
/// `apply(v, out)` computes out = A v. Starts from the all-ones vector and
/// normalizes in the max norm. Stops when the Collatz–Wielandt bracket
/// [min (Av)_i/v_i, max (Av)_i/v_i] closes to tol, or when successive
/// estimates agree to tol after an Aitken-style correction for slow linear
/// convergence and the normalized iterate has stopped moving.
template <class Apply>
PowerResult power_iteration(Apply&& apply, Eigen::Index n, double tol, int max_iters) {
    PowerResult res;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd y(n);
    double prev = -1.0, prev_delta = -1.0;
    std::vector<double> history;
    for (int it = 1; it <= max_iters; ++it) {
        apply(v, y);
        y = y.cwiseMax(0.0);
        double r = y.maxCoeff();
        res.iterations = it;
        if (!(r > 0.0)) {
            res.radius = 0.0;
            res.vector = v;
            return res;
        }
        if (!std::isfinite(r)) fail(ErrorKind::numerical, "overflow", "power iteration produced a non-finite value");
        history.push_back(r);

        double scale = std::max(1.0, r);
        if (v.minCoeff() > 0.0) {
            Eigen::ArrayXd q = y.array() / v.array();
            double lo = q.minCoeff(), hi = q.maxCoeff();
            if (hi - lo <= tol * scale) {
                res.radius = 0.5 * (lo + hi);
                res.vector = y / r;
                return res;
            }
        }
        if (prev >= 0.0) {
            double delta = std::fabs(r - prev);
            double err = delta;
            if (prev_delta > 0.0) {
                double q = delta / prev_delta;
                if (q < 1.0) err = delta / (1.0 - q);
                else err = std::numeric_limits<double>::infinity();
            }
            bool settled = delta == 0.0 || (prev_delta >= 0.0 && err <= tol * scale);
            // A repeated estimate from a cycling iterate is not convergence.
            bool stationary = (y / r - v).cwiseAbs().maxCoeff() <= std::sqrt(tol);
            if (settled && stationary && it > 2) {
                res.radius = r;
                res.vector = y / r;
                return res;
            }
            prev_delta = delta;
        }
        prev = r;
        v = y / r;
    }
    // Sign changes of successive differences flag a periodic (imprimitive) pattern.
    int flips = 0, count = 0;
    for (std::size_t i = history.size() >= 12 ? history.size() - 10 : 2; i < history.size(); ++i) {
        double d1 = history[i] - history[i - 1], d0 = history[i - 1] - history[i - 2];
        if (d1 * d0 < 0) ++flips;
        ++count;
    }
    bool oscillating = count > 0 && flips * 2 > count;
    std::ostringstream msg;
    msg << "power iteration did not converge in " << max_iters << " iterations; last estimate " << prev
        << (oscillating ? " (estimates oscillate)" : " (slow monotone drift)");
    throw PowerIterationFailure(msg.str(), v, prev, oscillating);
}

/// Spectral radius of a nonnegative square matrix; entries above −1e−12 are clamped to 0.
inline PowerResult spectral_radius(const Eigen::MatrixXd& A, double tol = 1e-8, int max_iters = 20000) {
    if (A.rows() != A.cols()) fail(ErrorKind::domain, "shape", "spectral_radius needs a square matrix");
    if (A.size() > 0 && A.minCoeff() < -1e-12) {
        fail(ErrorKind::domain, "negative_entry", "spectral_radius needs a nonnegative matrix");
    }
    if (A.size() > 0 && A.minCoeff() < 0.0) {
        Eigen::MatrixXd B = A.cwiseMax(0.0);
        return power_iteration([&](const Eigen::VectorXd& v, Eigen::VectorXd& out) { out.noalias() = B * v; },
                               B.rows(), tol, max_iters);
    }
    return power_iteration([&](const Eigen::VectorXd& v, Eigen::VectorXd& out) { out.noalias() = A * v; }, A.rows(),
                           tol, max_iters);
}

/// Perron root and vector of a nonnegative matrix from a full eigendecomposition.
inline PowerResult perron_dense(const Eigen::MatrixXd& A) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A.cwiseMax(0.0), true);
    const auto& ev = es.eigenvalues();
    double rmax = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) rmax = std::max(rmax, std::abs(ev[i]));
    // Among eigenvalues of maximal modulus, the Perron root is the real positive one.
    Eigen::Index best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (std::abs(ev[i]) < rmax * (1.0 - 1e-10)) continue;
        double score = ev[i].real() - std::fabs(ev[i].imag());
        if (score > best_score) best_score = score, best = i;
    }
    PowerResult res;
    res.radius = rmax;
    Eigen::VectorXcd w = es.eigenvectors().col(best);
    Eigen::Index arg;
    w.cwiseAbs().maxCoeff(&arg);
    w /= w[arg];
    Eigen::VectorXd v = w.real().cwiseAbs();
    res.vector = v / v.maxCoeff();
    res.dense_fallback = true;
    return res;
}

/// Power iteration, falling back to a dense eigensolve when the dominant
/// eigenvalue is too weakly separated for the iteration budget.
inline PowerResult spectral_radius_robust(const Eigen::MatrixXd& A, double tol = 1e-8, int max_iters = 20000) {
    try {
        return spectral_radius(A, tol, max_iters);
    } catch (const PowerIterationFailure&) {
        return perron_dense(A);
    }
}

}  // namespace agespec
