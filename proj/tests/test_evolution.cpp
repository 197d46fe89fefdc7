#include <agespec/evolution.hpp>

#include <catch2/catch.hpp>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace agespec;

namespace {

ScenarioConfig small(const std::string& mu) {
    ScenarioConfig c;
    c.domain.n_x = 41;
    c.age.n_a = 41;
    c.age.horizon = 3.0;
    c.kernel = KernelSpec::epanechnikov_kernel(0.5);
    c.rates.beta_field = ScalarField("2");
    c.rates.mu_field = ScalarField(mu);
    c.diffusion_rate = 1.3;
    return c;
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("age-independent rates give a matrix exponential", "[evolution]") {
    // U(0, a) = exp(a (D K − D − diag μ)), an oracle independent of the stepper.
    for (const char* mu : {"0.5", "0.5+x^2"}) {
        auto cfg = small(mu);
        auto t = tabulate_rates(cfg);
        auto K = build_kernel_matrix(cfg.kernel, t.xgrid);
        auto stack = compute_diffused_propagator(cfg, K);
        const double D = cfg.diffusion_rate;
        Eigen::MatrixXd L = D * K.matrix - D * Eigen::MatrixXd::Identity(41, 41);
        for (int i = 0; i < 41; ++i) L(i, i) -= t.mu(0, i);
        for (std::size_t k : {1u, 10u, 40u}) {
            Eigen::MatrixXd ref = (t.agrid.nodes[k] * L).exp();
            INFO(mu << " k=" << k);
            CHECK(rel_err(stack.matrix(k), ref) < 1e-6);
        }
        CHECK(stack.matrix(0).isIdentity(1e-14));
    }
}

TEST_CASE("age-dependent death rate integrates the hazard", "[evolution]") {
    // With μ = 0.4 + 0.2a the hazard factor is exp(−0.4a − 0.1a²) times the diffusion semigroup.
    auto cfg = small("0.4+0.2*a");
    auto t = tabulate_rates(cfg);
    auto K = build_kernel_matrix(cfg.kernel, t.xgrid);
    auto stack = compute_diffused_propagator(cfg, K);
    const double D = cfg.diffusion_rate;
    Eigen::MatrixXd L = D * K.matrix - D * Eigen::MatrixXd::Identity(41, 41);
    for (std::size_t k : {5u, 40u}) {
        double a = t.agrid.nodes[k];
        Eigen::MatrixXd ref = std::exp(-0.4 * a - 0.1 * a * a) * (a * L).exp();
        CHECK(rel_err(stack.matrix(k), ref) < 1e-6);
    }
}

TEST_CASE("propagators are positive and apply consistently", "[evolution]") {
    auto cfg = small("0.5+x^2");
    auto t = tabulate_rates(cfg);
    auto K = build_kernel_matrix(cfg.kernel, t.xgrid);
    auto stack = compute_diffused_propagator(cfg, K);
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(41, 0.0, 1.0);
    for (std::size_t k = 1; k < stack.n_a(); k += 7) {
        CHECK(stack.matrix(k).minCoeff() >= 0.0);
        CHECK((apply_propagator(stack, k, v) - stack.matrix(k) * v).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("propagator stacks survive a disk round trip", "[evolution]") {
    auto cfg = small("0.5");
    auto t = tabulate_rates(cfg);
    auto K = build_kernel_matrix(cfg.kernel, t.xgrid);
    auto stack = compute_diffused_propagator(cfg, K);
    auto path = (std::filesystem::temp_directory_path() / "agespec_stack_test.bin").string();
    write_stack(stack, path);
    auto back = read_stack(path, t.agrid);
    std::remove(path.c_str());
    REQUIRE(back.n_a() == stack.n_a());
    for (std::size_t k = 0; k < stack.n_a(); k += 10) CHECK(rel_err(back.matrix(k), stack.matrix(k)) < 1e-15);
}
