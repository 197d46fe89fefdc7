#include <agespec/acceptance.hpp>
#include <agespec/criteria.hpp>

#include <catch2/catch.hpp>

#include <cmath>

using namespace agespec;

namespace {

ScenarioConfig sized(ScenarioConfig c, std::size_t n) {
    c.domain.n_x = n;
    c.age.n_a = n;
    return c;
}

IntegrabilityVerdict synthetic(double power) {
    IntegrabilityVerdict v;
    for (std::size_t n : {101u, 201u, 401u, 801u}) v.refinement_levels.emplace_back(n, 3.0 * std::pow(n - 1.0, power));
    detail::classify(v, SlopeRule{});
    return v;
}

}  // namespace

TEST_CASE("refinement slopes classify integrability", "[criteria]") {
    auto d = synthetic(0.5);
    CHECK(d.slope == Approx(0.5));
    CHECK(d.verdict == Verdict::diverges);
    CHECK(synthetic(0.0).verdict == Verdict::converges);
    CHECK(synthetic(0.2).verdict == Verdict::inconclusive);
    CHECK(std::string(to_string(Verdict::converges)) == "converges");
}

TEST_CASE("Criterion I separates plateaus from sharp maxima", "[criteria]") {
    auto plateau = check_criterion_I(scenarios::plateau());
    CHECK(plateau.verdict == Verdict::diverges);
    CHECK(plateau.refinement_levels.size() == 4);
    CHECK(std::fabs(plateau.hotspot_x) <= 0.5 + 1e-9);

    auto sharp = scenarios::homogeneous("2-2*sqrt(abs(x))");
    sharp.kernel = KernelSpec::epanechnikov_kernel(1.0);
    CHECK(check_criterion_I(sharp).verdict == Verdict::converges);
}

TEST_CASE("Criterion II needs a birth cutoff", "[criteria]") {
    CHECK(check_criterion_II(scenarios::quadratic_gap()).verdict == Verdict::diverges);
    auto sharp = scenarios::quadratic_gap();
    sharp.rates.beta_field = ScalarField("2.5-2*sqrt(abs(x))");
    CHECK(check_criterion_II(sharp).verdict == Verdict::converges);
    try {
        check_criterion_II(scenarios::plateau());
        FAIL("expected a domain error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::domain);
        CHECK(e.code() == "no_cutoff");
    }
}

TEST_CASE("nonexistence test value matches its closed form", "[criteria]") {
    // ρ ∫ dx / (β_max − β(x)) = (1/4) ∫_{−1}^{1} dx / (2√|x|) = 1/2.
    const double oracle = 0.25 * 2.0 * (1.0 / 2.0) * 2.0;
    auto ne = detect_nonexistence(sized(scenarios::counterexample(), 51));
    CHECK(ne.applicable);
    CHECK(ne.rho == Approx(0.25));
    CHECK(ne.beta_max == Approx(2.0));
    CHECK(ne.argmax_x == Approx(0.0).margin(1e-6));
    CHECK(ne.test_value == Approx(oracle).margin(1e-6));
    CHECK(ne.predicted_nonexistence);

    auto quad = detect_nonexistence(sized(scenarios::homogeneous("2-2*x^2"), 51));
    CHECK(quad.applicable);
    CHECK(std::isinf(quad.test_value));
    CHECK_FALSE(quad.predicted_nonexistence);

    auto other = detect_nonexistence(sized(scenarios::plateau(), 51));
    CHECK_FALSE(other.applicable);
    CHECK_FALSE(other.reason.empty());
}

TEST_CASE("localization index of flat and spiked vectors", "[criteria]") {
    auto g = SpatialGrid::uniform(-1.0, 1.0, 101);
    CHECK(localization_index(g, Eigen::VectorXd::Ones(101)) == Approx(0.5));
    Eigen::VectorXd spike = Eigen::VectorXd::Zero(101);
    spike[50] = 1.0;
    CHECK(localization_index(g, spike) == Approx(1.0 / g.step()));
}

TEST_CASE("the principal pair passes the test-pair check, shifted ones fail", "[criteria]") {
    auto p = SpectralProblem::build(sized(scenarios::quadratic_gap(), 100));
    auto rep = solve_spectral_bound(p, SolveOptions{false, false, 0});
    auto g = verify_generalized_eigenvalue(p, rep);
    CHECK(g.passed);
    CHECK(g.lambda_lower <= rep.s_A);
    CHECK(g.lambda_upper >= rep.s_A);
    CHECK(g.age_residual < 1e-2);
    CHECK_FALSE(check_test_pair(p, rep.eigvec_age0, rep.s_A + 0.5, true, 1e-7).ok);
    CHECK_FALSE(check_test_pair(p, rep.eigvec_age0, rep.s_A - 0.5, false, 1e-7).ok);
    CHECK(check_test_pair(p, rep.eigvec_age0, rep.s_A - 0.5, true, 1e-7).ok);
}

TEST_CASE("maximum principle in both regimes", "[criteria][property]") {
    auto neg = sized(scenarios::quadratic_gap("3"), 60);
    auto pn = SpectralProblem::build(neg);
    auto rn = solve_spectral_bound(pn, SolveOptions{false, false, 0});
    REQUIRE(rn.s_A < 0.0);
    auto mn = verify_strong_max_principle(pn, rn, 10);
    CHECK(mn.regime == "negative");
    CHECK(mn.positive_count == 10);
    CHECK(mn.min_value > 0.0);
    CHECK(mn.passed);

    auto pp = SpectralProblem::build(sized(scenarios::quadratic_gap(), 60));
    auto rp = solve_spectral_bound(pp, SolveOptions{false, false, 0});
    auto mp = verify_strong_max_principle(pp, rp, 10);
    CHECK(mp.regime == "positive");
    CHECK(mp.violation_exhibited);
    CHECK(mp.violation_min < 0.0);
}

TEST_CASE("the negative-forcing solve is linear", "[criteria]") {
    auto p = SpectralProblem::build(sized(scenarios::quadratic_gap("3"), 30));
    const auto na = static_cast<Eigen::Index>(p.tables.n_a()), nx = static_cast<Eigen::Index>(p.tables.n_x());
    Eigen::MatrixXd f1 = -Eigen::MatrixXd::Ones(na, nx);
    Eigen::MatrixXd f2 = -Eigen::MatrixXd::Random(na, nx).cwiseAbs();
    auto u = solve_negative_forcing(p, {f1, f2, f1 + 2.0 * f2});
    CHECK((u[2] - u[0] - 2.0 * u[1]).cwiseAbs().maxCoeff() < 1e-10 * u[2].cwiseAbs().maxCoeff());
    CHECK(admissible_field_positive(u[0]));
}
