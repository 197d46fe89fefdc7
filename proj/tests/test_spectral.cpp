#include <agespec/acceptance.hpp>
#include <agespec/spectral.hpp>

#include <catch2/catch.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace agespec;

namespace {

/// Root s of 2(1 − e^{−2s}) = s by bisection; the scalar Lotka equation of β = 2·1_{a<2}.
double lotka_truncated() {
    double lo = 1.0, hi = 3.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (2.0 * (1.0 - std::exp(-2.0 * mid)) > mid ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double dense_radius(const Eigen::MatrixXd& A) {
    return Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues().cwiseAbs().maxCoeff();
}

ScenarioConfig sized(ScenarioConfig c, std::size_t n) {
    c.domain.n_x = n;
    c.age.n_a = n;
    return c;
}

}  // namespace

TEST_CASE("characteristic function matches the closed forms", "[spectral]") {
    // β = 2, μ = 0.5, D = 1: G_α = 2/(α + 1.5) on an infinite horizon,
    // 2(1 − e^{−2s})/s with s = α + 1.5 when births stop at age 2.
    auto inf = tabulate_rates(scenarios::homogeneous());
    Characteristic Gi(inf, 1.0);
    auto cut = tabulate_rates(scenarios::truncated_birth());
    Characteristic Gc(cut, 1.0);
    for (double alpha : {-0.5, 0.2, 1.0}) {
        double s = alpha + 1.5;
        CHECK(Gi.at(alpha, 17) == Approx(2.0 / s).epsilon(5e-4));
        CHECK(Gc.at(alpha, 17) == Approx(2.0 * (1.0 - std::exp(-2.0 * s)) / s).epsilon(1e-8));
    }
    auto prof = Gc.profile(0.2);
    CHECK(prof.values.size() == cut.n_x());
    CHECK(prof.max_value == Approx(Gc.at(0.2, 0)));
}

TEST_CASE("alpha** solves the scalar Lotka equation", "[spectral]") {
    double s = lotka_truncated();
    CHECK(s - 0.5 == Approx(1.4604).margin(1e-4));
    CHECK(solve_alpha_star(scenarios::truncated_birth()) == Approx(s - 1.5).margin(1e-6));
    CHECK(solve_alpha_star(scenarios::homogeneous()) == Approx(0.5).margin(2e-4));
}

TEST_CASE("homogeneous rates decouple age and space", "[spectral]") {
    // s_A = ϖ − D(1 − r(K)) and s_B1C = ϖ − D, with r(K) from a dense eigensolver.
    for (double radius : {0.5, 2.0}) {
        auto c = sized(scenarios::truncated_birth(), 80);
        c.kernel = KernelSpec::epanechnikov_kernel(radius);
        auto p = SpectralProblem::build(c);
        double lambda0 = 1.0 - dense_radius(p.kernel.matrix);
        double varpi = lotka_truncated() - 0.5;
        auto rep = solve_spectral_bound(p);
        INFO("radius " << radius);
        CHECK(rep.s_A == Approx(varpi - lambda0).margin(1e-5));
        CHECK(rep.s_B1C == Approx(varpi - 1.0).margin(1e-5));
        CHECK(rep.lambda0_K == Approx(lambda0).margin(1e-10));
        auto hp = homogeneous_closed_form(c);
        CHECK(hp.predicted_s_A == Approx(rep.s_A).margin(1e-5));
    }
}

TEST_CASE("the principal eigenpair satisfies r(M) = 1", "[spectral]") {
    auto p = SpectralProblem::build(sized(scenarios::quadratic_gap(), 60));
    auto rep = solve_spectral_bound(p);
    Eigen::MatrixXd M = assemble_M_lambda(p, rep.s_A);
    CHECK(dense_radius(M) == Approx(1.0).margin(1e-6));
    CHECK(rep.existence(1e-6));
    CHECK(rep.eigvec_age0.minCoeff() > 0.0);
    CHECK((M * rep.eigvec_age0 - rep.eigvec_age0).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(rep.residual_M < 1e-6);
    CHECK(rep.eigfun.rows() == 60);
    CHECK(rep.eigfun.minCoeff() > 0.0);
    CHECK(rep.spectral_gap > 0.0);
    CHECK(rep.s_A >= rep.s_B1C);
}

TEST_CASE("r(M_lambda) is decreasing and log-convex", "[spectral][property]") {
    std::mt19937_64 rng(11);
    for (int s = 0; s < 4; ++s) {
        auto p = SpectralProblem::build(sized(scenarios::random(rng), 40));
        double start = std::max(p.lambda_lower_limit() + 0.1, -1.0);
        std::vector<double> logr;
        for (int j = 0; j < 9; ++j) logr.push_back(std::log(dense_radius(assemble_M_lambda(p, start + 0.25 * j))));
        for (int j = 1; j < 9; ++j) CHECK(logr[j] < logr[j - 1]);
        for (int j = 1; j + 1 < 9; ++j) CHECK(logr[j - 1] - 2 * logr[j] + logr[j + 1] >= -1e-9);
    }
}

TEST_CASE("s_A dominates s(B1+C) on random scenarios", "[spectral][property]") {
    std::mt19937_64 rng(5);
    for (int s = 0; s < 6; ++s) {
        auto rep = solve_spectral_bound(sized(scenarios::random(rng), 40), SolveOptions{false, false, 0});
        CHECK(rep.s_A >= rep.s_B1C - 1e-6);
        CHECK(std::fabs(rep.r_M - 1.0) < 1e-6);
    }
}

TEST_CASE("F_lambda has radius one at s_A and less above it", "[spectral]") {
    auto p = SpectralProblem::build(sized(scenarios::quadratic_gap(), 60));
    auto rep = solve_spectral_bound(p, SolveOptions{false, false, 0});
    CHECK(spectral_radius_F(p, rep.s_B1C, rep.s_A) == Approx(1.0).margin(1e-2));
    CHECK(spectral_radius_F(p, rep.s_B1C, rep.s_A + 0.3) < 0.98);
}

TEST_CASE("alpha(x) is defined pointwise and bounded by alpha**", "[spectral]") {
    auto c = sized(scenarios::quadratic_gap(), 41);
    auto rep = solve_spectral_bound(c, SolveOptions{false, false, 0});
    auto p = SpectralProblem::build(c);
    double astar = solve_alpha_star(Characteristic(p.tables, p.diffusion), 1e-10);
    for (const auto& a : rep.alpha_of_x) {
        REQUIRE(a.has_value());
        CHECK(*a <= astar + 1e-6);
    }
    CHECK(*rep.alpha_of_x[20] == Approx(astar).margin(1e-6));
}
