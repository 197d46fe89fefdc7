#include <agespec/config_io.hpp>
#include <agespec/validation.hpp>

#include <catch2/catch.hpp>

#include <cmath>

using namespace agespec;

namespace {

const char* kReference = R"(
name = "ref"

[domain]
lower = -1.0
upper = 1.0
n_x = 40

[age]
horizon = "infinite"
n_a = 40

[kernel]
profile = "constant"
radius = 2.0
diffusion_rate = 1.0

[rates]
beta = "2"
mu = "0.5"
beta_cutoff_age = 2.0

[solver]
root_tol = 1e-6
seed = 7
)";

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

TEST_CASE("expressions evaluate the supported grammar", "[expression]") {
    CHECK(Expression("2.5-2*x^2")(0.0, 0.5) == Approx(2.0));
    CHECK(Expression("min(2, 2.5-abs(x))")(0.0, -0.8) == Approx(1.7));
    CHECK(Expression("2*exp(-0.2*a)")(1.0, 0.0) == Approx(2.0 * std::exp(-0.2)));
    CHECK(Expression("sqrt(abs(x))+max(a, 1)")(3.0, -0.25) == Approx(3.5));
    CHECK(Expression("-x^2")(0.0, 3.0) == Approx(-9.0));
    CHECK(Expression("2^3^2")(0.0, 0.0) == Approx(512.0));
    CHECK_FALSE(Expression("x^2").depends_on_age());
    CHECK(Expression("a*x").depends_on_age());
}

TEST_CASE("malformed expressions are config errors", "[expression]") {
    for (const char* bad : {"2*", "(x", "y+1", "sin(x)", "1 2"}) {
        INFO(bad);
        CHECK(kind_of([&] { Expression e(bad); }) == ErrorKind::config);
    }
}

TEST_CASE("scenario documents load with defaults and overrides", "[config]") {
    auto ls = load_scenario_text(kReference);
    const auto& c = ls.config;
    CHECK(c.name == "ref");
    CHECK(c.domain.n_x == 40);
    CHECK_FALSE(c.age.horizon.has_value());
    CHECK(c.kernel.profile == KernelProfile::constant);
    CHECK(*c.rates.beta_cutoff_age == 2.0);
    CHECK(c.seed == 7);
    CHECK(ls.warnings.empty());

    auto ov = load_scenario_text(kReference, {"solver.root_tol=1e-8", "kernel.diffusion_rate=0.5", "name=\"other\""});
    CHECK(ov.config.tol.root_tol == 1e-8);
    CHECK(ov.config.diffusion_rate == 0.5);
    CHECK(ov.config.name == "other");
}

TEST_CASE("unknown keys warn, missing or mistyped keys fail", "[config]") {
    std::string extra = std::string(kReference) + "\n[extra]\nfoo = 1\n";
    CHECK(load_scenario_text(extra).warnings.size() == 1);
    CHECK(kind_of([] { load_scenario_text("[kernel]\ndiffusion_rate = 1.0\n[rates]\nmu = \"1\"\n"); }) ==
          ErrorKind::config);
    CHECK(kind_of([] { load_scenario_text(kReference, {"domain.n_x=\"many\""}); }) == ErrorKind::config);
    CHECK(kind_of([] { load_scenario_text(kReference, {"kernel.diffusion_rate=-1"}); }) == ErrorKind::config);
    CHECK(kind_of([] { load_scenario_text(kReference, {"bad override"}); }) == ErrorKind::config);
    CHECK(kind_of([] { load_scenario("/nonexistent/file.toml"); }) == ErrorKind::config);
}

TEST_CASE("JSON documents are accepted", "[config]") {
    auto ls = load_scenario_text(R"({"kernel": {"profile": "epanechnikov", "radius": 0.5, "diffusion_rate": 2},
                                     "rates": {"beta": "1+x", "mu": "1"}})");
    CHECK(ls.config.kernel.radius == 0.5);
    CHECK(ls.config.diffusion_rate == 2.0);
    CHECK(ls.config.rates.beta(0.0, 0.5) == Approx(1.5));
}

TEST_CASE("configs round-trip through the text form", "[config]") {
    auto c = load_scenario_text(kReference, {"rates.beta=\"2.5-2*x^2\"", "kernel.m=1.5"}).config;
    auto again = load_scenario_text(scenario_to_toml(c)).config;
    CHECK(scenario_to_json(again) == scenario_to_json(c));
}

TEST_CASE("rate tables interpolate bilinear data exactly", "[config]") {
    std::string csv = "a,x,beta,mu\n";
    for (double a : {0.0, 1.0, 2.0}) {
        for (double x : {-1.0, 0.0, 1.0}) {
            csv += std::to_string(a) + "," + std::to_string(x) + "," + std::to_string(1 + a + 2 * x + 0.5 * a * x) + "," +
                   std::to_string(0.3 + 0.1 * a) + "\n";
        }
    }
    auto t = parse_rate_csv(csv);
    CHECK((*t.beta)(0.5, 0.25) == Approx(1 + 0.5 + 0.5 + 0.5 * 0.5 * 0.25));
    CHECK((*t.mu)(1.5, -0.7) == Approx(0.45));
    CHECK((*t.beta)(5.0, 0.0) == Approx(3.0));  // clamped beyond the last age
    CHECK(kind_of([] { parse_rate_csv("a,x,b,m\n0,0,1,1\n"); }) == ErrorKind::config);
}

TEST_CASE("validation flags a death rate that vanishes", "[validation]") {
    auto c = load_scenario_text(kReference, {"rates.mu=\"x^2\""}).config;
    auto rep = validate_assumptions(c);
    CHECK_FALSE(rep.all_passed());
    bool named = false;
    for (const auto& ch : rep.checks) named = named || (ch.name == "mu_lower_bound" && !ch.passed);
    CHECK(named);

    c.strict = true;
    try {
        enforce_assumptions(c);
        FAIL("strict mode must throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::verification);
        CHECK(e.code() == "mu_lower_bound");
    }
    c.strict = false;
    CHECK_FALSE(enforce_assumptions(c).empty());
}

TEST_CASE("validation accepts the reference scenario", "[validation]") {
    auto rep = validate_assumptions(load_scenario_text(kReference).config);
    for (const auto& ch : rep.checks) {
        INFO(ch.name << ": " << ch.detail);
        CHECK(ch.passed);
    }
}

TEST_CASE("error kinds map to the documented exit codes", "[error]") {
    CHECK(exit_code_for(ErrorKind::verification) == 1);
    CHECK(exit_code_for(ErrorKind::config) == 2);
    CHECK(exit_code_for(ErrorKind::numerical) == 3);
}
