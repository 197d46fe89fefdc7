#include <agespec/config_io.hpp>

#include <catch2/catch.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using agespec::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status;
    std::string out;
};

/// Runs the CLI through the shell, capturing stdout.
Run spectra(const std::string& args, const std::string& env = "") {
    std::string cmd = env + " " SPECTRA_BIN " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
    int st = pclose(pipe);
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

std::string scenario(const std::string& name) { return std::string(SCENARIO_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("spectra_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("solve on the shipped reference config", "[cli]") {
    // ϖ from 2(1 − e^{−2s}) = s by bisection; the reference value is ϖ − 0.5 ≈ 0.9603.
    double lo = 1.0, hi = 3.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (2.0 * (1.0 - std::exp(-2.0 * mid)) > mid ? lo : hi) = mid;
    }
    const double expected = 0.5 * (lo + hi) - 1.0;
    auto dir = scratch("solve");
    auto r = spectra("solve -c " + scenario("homogeneous_reference.toml") + " -o " + dir.string());
    REQUIRE(r.status == 0);
    auto j = json::parse(r.out);
    CHECK(std::fabs(j["s_A"].get<double>() - expected) <= 20 * 1e-6);
    CHECK(std::fabs(j["s_A"].get<double>() - 0.9603) < 1e-4);
    CHECK(j["existence"].get<bool>());
    auto report = json::parse(slurp(dir / "spectral_report.json"));
    CHECK(report["eigvec_age0"].size() == 200);
    std::string csv = slurp(dir / "eigenfunction.csv");
    CHECK(csv.rfind("a,x,phi\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 200 * 200 + 1);
}

TEST_CASE("verify on a broken config names the assumption", "[cli]") {
    auto r = spectra("verify --suite quick -c " + scenario("broken_mu_zero.toml") + " -o " + scratch("broken").string());
    CHECK(r.status != 0);
    auto j = json::parse(r.out);
    CHECK(j["error"]["code"] == "mu_lower_bound");
    CHECK(j["error"]["message"].get<std::string>().find("mu_lower_bound") != std::string::npos);
}

TEST_CASE("sweep writes one CSV row per value with a verdict column", "[cli]") {
    auto d1 = scratch("sweep1"), d2 = scratch("sweep2");
    std::string args = "sweep -c " + scenario("homogeneous_reference.toml") + " --param D --values 0.01,0.1,1,10 --set domain.n_x=60 --set age.n_a=60 -o ";
    REQUIRE(spectra(args + d1.string()).status == 0);
    REQUIRE(spectra(args + d2.string() + " -j 1").status == 0);
    std::string csv = slurp(d1 / "sweep.csv");
    CHECK(csv.rfind("param,s_A,s_B1C,verdict,gap\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(csv == slurp(d2 / "sweep.csv"));
}

TEST_CASE("usage and config errors exit with code 2", "[cli]") {
    CHECK(spectra("").status == 2);
    CHECK(spectra("sweep -c " + scenario("plateau.toml") + " --param q --values 1").status == 2);
    auto r = spectra("solve -c /nonexistent.toml");
    CHECK(r.status == 2);
    CHECK(json::parse(r.out)["error"]["kind"] == "config");
    CHECK(spectra("solve -c " + scenario("plateau.toml") + " --set kernel.diffusion_rate=-1").status == 2);
}

TEST_CASE("numerical failures exit with code 3", "[cli]") {
    auto r = spectra("criteria -c " + scenario("plateau.toml") + " --set kernel.radius=0.001 -o " + scratch("num").string());
    CHECK(r.status == 3);
}

TEST_CASE("SPECTRA_SEED sets the seed and verify is reproducible", "[cli]") {
    auto d1 = scratch("seed1"), d2 = scratch("seed2");
    REQUIRE(spectra("verify --only 3,12 -o " + d1.string(), "SPECTRA_SEED=99").status == 0);
    REQUIRE(spectra("verify --only 3,12 -o " + d2.string() + " -j 1", "SPECTRA_SEED=99").status == 0);
    std::string a = slurp(d1 / "verify_report.json");
    CHECK(json::parse(a)["seed"] == 99);
    CHECK(a == slurp(d2 / "verify_report.json"));
}

TEST_CASE("criteria and simulate emit their artifacts", "[cli]") {
    auto dir = scratch("crit");
    auto r = spectra("criteria -c " + scenario("quadratic_gap.toml") + " --set domain.n_x=60 --set age.n_a=60 --trials 5 -o " + dir.string());
    REQUIRE(r.status == 0);
    auto j = json::parse(r.out);
    CHECK(j["criterion_II"]["verdict"] == "diverges");
    CHECK(j["nonexistence"]["applicable"] == false);
    CHECK(j["max_principle"]["regime"] == "positive");
    CHECK(fs::exists(dir / "criterion_I.csv"));

    auto s = spectra("simulate -c " + scenario("homogeneous_reference.toml") + " --set domain.n_x=60 --set age.n_a=60 -o " + dir.string());
    REQUIRE(s.status == 0);
    auto g = json::parse(s.out);
    CHECK(std::fabs(g["omega_minus_s_A"].get<double>()) < 5e-2);
    CHECK(slurp(dir / "trajectory.csv").rfind("t,log_mass\n", 0) == 0);
}
