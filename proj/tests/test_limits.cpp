#include <agespec/acceptance.hpp>
#include <agespec/limits.hpp>

#include <catch2/catch.hpp>

#include <cmath>

using namespace agespec;

namespace {

ScenarioConfig sized(ScenarioConfig c, std::size_t n) {
    c.domain.n_x = n;
    c.age.n_a = n;
    return c;
}

}  // namespace

TEST_CASE("homogeneous D sweep follows the closed form", "[limits]") {
    // Constant kernel over Ω: λ⁰ = 1/2, so s_A − s(B₁+C) = D/2 exactly.
    auto t = sweep_diffusion_rate(sized(scenarios::homogeneous(), 60), {0.64, 0.16, 0.04, 0.01});
    REQUIRE(t.values.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(t.s_A[i] - t.s_B1C[i] == Approx(t.values[i] / 2).margin(1e-5));
        CHECK(t.row_status[i] == "exists");
    }
    const auto* lim = t.find("D_to_0_limit");
    REQUIRE(lim != nullptr);
    CHECK(lim->passed);
    CHECK(t.find("lower_bound")->passed);
    CHECK(t.find("no_such_claim") == nullptr);
    CHECK(t.all_passed());
}

TEST_CASE("large D sweep obeys the upper bound and decreases", "[limits]") {
    auto t = sweep_diffusion_rate(sized(scenarios::truncated_birth(), 60), {4, 16, 64});
    CHECK(t.find("upper_bound_large_D")->passed);
    CHECK(t.find("decreasing_large_D")->passed);
    // s_A = ϖ − D/2 with ϖ + 1/2 the root of 2(1 − e^{−2s}) = s.
    double lo = 1.0, hi = 3.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (2.0 * (1.0 - std::exp(-2.0 * mid)) > mid ? lo : hi) = mid;
    }
    CHECK(t.s_A[2] == Approx(0.5 * (lo + hi) - 0.5 - 32.0).margin(1e-4));
}

TEST_CASE("kernel scaling sweeps report the applicable limits", "[limits]") {
    auto c = sized(scenarios::homogeneous(), 60);
    auto up = sweep_kernel_scaling(c, {1, 2, 4, 8, 16}, 0.0);
    REQUIRE(up.find("gamma_to_infinity_limit") != nullptr);
    CHECK(up.find("gamma_to_infinity_limit")->passed);
    CHECK(up.reference_limit == Approx(undiffused_alpha_star(c) - 1.0).margin(1e-9));

    auto none = sweep_kernel_scaling(c, {1}, 0.0);
    REQUIRE(none.verdicts.size() == 1);
    CHECK(none.verdicts[0].claim == "no_applicable_claim");
    CHECK_FALSE(none.all_passed());
}

TEST_CASE("parallel sweeps match serial ones exactly", "[limits]") {
    auto c = sized(scenarios::quadratic_gap(), 40);
    SweepOptions serial, par;
    par.jobs = 3;
    auto a = sweep_diffusion_rate(c, {0.5, 1, 2}, serial);
    auto b = sweep_diffusion_rate(c, {0.5, 1, 2}, par);
    CHECK(a.s_A == b.s_A);
    CHECK(a.s_B1C == b.s_B1C);
}

TEST_CASE("separability of mu is detected", "[limits]") {
    CHECK(mu_separable(tabulate_rates(sized(scenarios::homogeneous("2", "0.5+x^2"), 30))));
    auto mixed = sized(scenarios::homogeneous("2", "0.5+a*x^2"), 30);
    mixed.age.horizon = 5.0;
    CHECK_FALSE(mu_separable(tabulate_rates(mixed)));
}

TEST_CASE("perturbation properties hold on a heterogeneous base", "[limits][property]") {
    PerturbationSpec spec;
    spec.random_trials = 4;
    auto rep = check_monotonicity_properties(sized(scenarios::quadratic_gap(), 50), spec);
    for (const auto& c : rep.checks) {
        INFO(c.name << ": measured " << c.measured << " bound " << c.bound << " " << c.note);
        CHECK(c.passed);
    }
    CHECK(rep.max_lipschitz_ratio <= 1.0 + 1e-6);
}
