#include <agespec/kernel.hpp>
#include <agespec/power_iteration.hpp>
#include <agespec/validation.hpp>

#include <catch2/catch.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace agespec;

namespace {

/// Composite Simpson on [lo, hi] with n (even) panels.
template <class F>
double simpson(F f, double lo, double hi, int n) {
    double h = (hi - lo) / n, s = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("age quadrature integrates cubics exactly for any node count", "[grid]") {
    for (std::size_t n : {4u, 5u, 6u, 11u, 200u}) {
        auto g = AgeGrid::uniform(3.0, n);
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double a = g.nodes[k];
            s += g.quad_weights[k] * (a * a * a - 2.0 * a + 1.0);
        }
        INFO(n);
        CHECK(s == Approx(81.0 / 4.0 - 9.0 + 3.0).epsilon(1e-12));
    }
}

TEST_CASE("spatial grids include both ends", "[grid]") {
    auto g = SpatialGrid::uniform(-1.0, 1.0, 201);
    CHECK(g.nodes.front() == -1.0);
    CHECK(g.nodes.back() == 1.0);
    CHECK(g.nodes[100] == Approx(0.0).margin(1e-15));
    CHECK(g.nearest(0.013) == 101);
}

TEST_CASE("kernel profiles have unit mass under scaling", "[kernel]") {
    for (double gamma : {0.25, 1.0, 3.0}) {
        auto e = KernelSpec::epanechnikov_kernel(0.7, gamma);
        auto c = KernelSpec::constant_kernel(2.0, gamma);
        double R = e.support();
        CHECK(simpson([&](double z) { return e(z); }, -R, R, 4000) == Approx(1.0).epsilon(1e-10));
        CHECK(kernel_mass(e) == Approx(1.0).epsilon(1e-12));
        CHECK(kernel_mass(c) == Approx(1.0).epsilon(1e-12));
        CHECK(e(0.0) > 0.0);
        CHECK(e(1.01 * R) == 0.0);
    }
    CHECK(KernelSpec::constant_kernel(2.0)(0.3) == Approx(0.25));
}

TEST_CASE("the Nystrom matrix reproduces the kernel integral", "[kernel]") {
    auto g = SpatialGrid::uniform(-1.0, 1.0, 201);
    auto k = KernelSpec::epanechnikov_kernel(0.5);
    auto K = build_kernel_matrix(k, g);
    CHECK(K.matrix.minCoeff() >= 0.0);
    // Interior rows integrate J over its whole support.
    CHECK(K.matrix.row(100).sum() == Approx(1.0).epsilon(1e-12));
    // Boundary row: half of the kernel mass, against a fine independent quadrature.
    double half = simpson([&](double z) { return k(z); }, 0.0, 0.5, 4000);
    CHECK(K.matrix.row(0).sum() == Approx(half).epsilon(1e-3));
    // Smooth test function: (Kf)(x) against a fine quadrature.
    Eigen::VectorXd f(201);
    for (int i = 0; i < 201; ++i) f[i] = std::cos(g.nodes[static_cast<std::size_t>(i)]);
    Eigen::VectorXd Kf = K.apply(f);
    for (int i : {0, 37, 100, 160}) {
        double x = g.nodes[static_cast<std::size_t>(i)];
        double lo = std::max(-1.0, x - 0.5), hi = std::min(1.0, x + 0.5);
        double ref = simpson([&](double y) { return k(x - y) * std::cos(y); }, lo, hi, 8000);
        INFO(i);
        CHECK(Kf[i] == Approx(ref).epsilon(2e-4));
    }
}

TEST_CASE("constant kernel over the domain gives lambda0 = 1/2", "[kernel]") {
    auto g = SpatialGrid::uniform(-1.0, 1.0, 101);
    auto K = build_kernel_matrix(KernelSpec::constant_kernel(2.0), g);
    Eigen::EigenSolver<Eigen::MatrixXd> es(K.matrix);
    double r = es.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(r == Approx(0.5).epsilon(1e-12));
    CHECK(spectral_radius(K.matrix, 1e-13).radius == Approx(r).epsilon(1e-10));
}

TEST_CASE("kernels narrower than the grid step are rejected", "[kernel]") {
    auto g = SpatialGrid::uniform(-1.0, 1.0, 5);
    CHECK_THROWS_AS(build_kernel_matrix(KernelSpec::epanechnikov_kernel(0.1), g), Error);
}

TEST_CASE("power iteration agrees with a dense eigensolver", "[power]") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::MatrixXd A(30, 30);
        for (int i = 0; i < 30; ++i)
            for (int j = 0; j < 30; ++j) A(i, j) = U(rng) * (U(rng) < 0.3 ? 1.0 : 0.01);
        Eigen::EigenSolver<Eigen::MatrixXd> es(A);
        double ref = es.eigenvalues().cwiseAbs().maxCoeff();
        auto pr = spectral_radius(A, 1e-12);
        CHECK(pr.radius == Approx(ref).epsilon(1e-9));
        CHECK(pr.vector.minCoeff() >= 0.0);
        CHECK(pr.vector.maxCoeff() == Approx(1.0));
        CHECK((A * pr.vector - pr.radius * pr.vector).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("periodic matrices fall back to the dense solver", "[power]") {
    Eigen::MatrixXd P(3, 3);
    P << 0, 1, 0, 0, 0, 4, 1, 0, 0;
    CHECK_THROWS_AS(spectral_radius(P, 1e-12, 500), PowerIterationFailure);
    auto pr = spectral_radius_robust(P, 1e-12, 500);
    CHECK(pr.dense_fallback);
    CHECK(pr.radius == Approx(std::cbrt(4.0)).epsilon(1e-12));
    CHECK(pr.vector.minCoeff() > 0.0);
    CHECK((P * pr.vector - pr.radius * pr.vector).norm() < 1e-12);
}
