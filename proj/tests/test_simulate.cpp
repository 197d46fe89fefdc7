#include <agespec/acceptance.hpp>
#include <agespec/simulate.hpp>

#include <catch2/catch.hpp>

#include <cmath>

using namespace agespec;

namespace {

ScenarioConfig sized(ScenarioConfig c, std::size_t n) {
    c.domain.n_x = n;
    c.age.n_a = n;
    return c;
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::numerical;
}

}  // namespace

TEST_CASE("growth rate of the linear model matches s_A", "[simulate]") {
    for (const char* mu : {"0.5", "2"}) {
        auto c = sized(scenarios::truncated_birth(mu), 100);
        auto s_A = solve_spectral_bound(c, SolveOptions{false, false, 0}).s_A;
        auto g = estimate_growth_bound(c);
        INFO("mu " << mu);
        CHECK(g.omega == Approx(s_A).margin(5e-2));
        CHECK(g.r2 >= 0.999);
        CHECK(g.confident);
    }
}

TEST_CASE("eigenfunction initial data grows at exactly s_A", "[simulate]") {
    auto c = sized(scenarios::truncated_birth(), 80);
    auto rep = solve_spectral_bound(c, SolveOptions{false, false, 0});
    SimulationOptions opt;
    opt.t_final = 2.0;
    opt.burn_in = 0.0;
    opt.initial = rep.eigfun;
    auto g = estimate_growth_bound(c, opt);
    // First-order splitting in time: O(h_a) bias.
    CHECK(g.omega == Approx(rep.s_A).margin(5e-3));
    CHECK(g.r2 > 1.0 - 1e-10);
}

TEST_CASE("mass bookkeeping and state invariants", "[simulate]") {
    auto c = sized(scenarios::truncated_birth(), 40);
    LinearModel m(c);
    const auto& t = m.tables();
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(40, 40);
    CHECK(l1_mass(t, ones) == Approx(2.0 * 2.0));
    auto s = m.initial_state(ones);
    CHECK(s.log_factor == Approx(std::log(4.0)));
    auto next = m.step(s, m.age_step());
    CHECK(next.t == Approx(m.age_step()));
    CHECK(next.u.minCoeff() >= 0.0);
    CHECK(l1_mass(t, next.u) == Approx(1.0));
    CHECK(next.log_mass_history.size() == 2);
    auto half = step_linear_model(s, c, 0.5 * m.age_step());
    CHECK(half.u.minCoeff() >= 0.0);
}

TEST_CASE("invalid simulation inputs are rejected", "[simulate]") {
    auto c = sized(scenarios::truncated_birth(), 30);
    LinearModel m(c);
    CHECK(kind_of([&] { m.initial_state(Eigen::MatrixXd::Zero(30, 30)); }) == ErrorKind::domain);
    CHECK(kind_of([&] { m.initial_state(-Eigen::MatrixXd::Ones(30, 30)); }) == ErrorKind::domain);
    CHECK(kind_of([&] { m.initial_state(Eigen::MatrixXd::Ones(3, 30)); }) == ErrorKind::domain);
    auto s = m.initial_state(Eigen::MatrixXd::Ones(30, 30));
    CHECK(kind_of([&] { m.step(s, 2.0 * m.age_step()); }) == ErrorKind::domain);
    CHECK(kind_of([&] { m.step(s, 0.0); }) == ErrorKind::domain);
}

TEST_CASE("simulations are deterministic", "[simulate]") {
    auto c = sized(scenarios::quadratic_gap(), 40);
    SimulationOptions opt;
    opt.t_final = 2.0;
    auto a = estimate_growth_bound(c, opt), b = estimate_growth_bound(c, opt);
    CHECK(a.final_state.log_mass_history == b.final_state.log_mass_history);
    CHECK(trajectory_csv(a.final_state) == trajectory_csv(b.final_state));
}
