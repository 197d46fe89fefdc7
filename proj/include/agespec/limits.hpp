#pragma once

#include <agespec/error.hpp>
#include <agespec/parallel.hpp>
#include <agespec/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace agespec {

struct ClaimVerdict {
    std::string claim;
    bool passed = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct SweepTable {
    std::string parameter;  ///< "D" or "gamma"
    double m = 0.0;
    std::vector<double> values;
    std::vector<double> s_A;
    std::vector<double> s_B1C;
    std::vector<double> gaps;  ///< |s_A − reference_limit|
    std::vector<std::string> row_status;  ///< "exists", "no_existence" or "error: ..."
    double reference_limit = 0.0;
    std::vector<ClaimVerdict> verdicts;

    bool all_passed() const {
        for (const auto& v : verdicts) if (!v.passed) return false;
        return !verdicts.empty();
    }
    const ClaimVerdict* find(const std::string& claim) const {
        for (const auto& v : verdicts) if (v.claim == claim) return &v;
        return nullptr;
    }
};

struct SweepOptions {
    double limit_tol = 5e-2;
    /// Slack on the large-D upper bound, which is an equality for x-independent rates.
    double bound_tol = 1e-3;
    int jobs = 1;
};

/// One spectral solve reduced to the numbers a sweep needs.
struct SpectralPoint {
    double s_A = std::numeric_limits<double>::quiet_NaN();
    double s_B1C = std::numeric_limits<double>::quiet_NaN();
    bool existence = false;
    std::string error;
    double lambda0_K = 0.0;
    double lambda1 = 0.0;
};

inline SpectralPoint solve_point(const ScenarioConfig& cfg) {
    SpectralPoint pt;
    try {
        SpectralProblem p = SpectralProblem::build(cfg);
        SpectralReport r = solve_spectral_bound(p, SolveOptions{false, false, 0});
        pt.s_A = r.s_A;
        pt.s_B1C = r.s_B1C;
        pt.existence = r.existence(cfg.tol.root_tol);
        pt.lambda0_K = p.lambda0_K;
        pt.lambda1 = envelope_lambda1(p.tables, cfg.tol.root_tol);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::numerical) throw;
        pt.error = e.what();
    }
    return pt;
}

/// s(B₁+C) without diffusion: α** of the characteristic with D = 0.
inline double undiffused_alpha_star(const ScenarioConfig& cfg) {
    RateTables t = tabulate_rates(cfg);
    return solve_alpha_star(Characteristic(t, 0.0), cfg.tol.root_tol);
}

/// μ(a,x) − μ(a,x₀) − μ(a₀,x) + μ(a₀,x₀) ≈ 0 on the lattice.
inline bool mu_separable(const RateTables& t, double rel = 1e-10) {
    double scale = std::max(1.0, t.mu.cwiseAbs().maxCoeff());
    for (Eigen::Index k = 0; k < t.mu.rows(); ++k) {
        for (Eigen::Index i = 0; i < t.mu.cols(); ++i) {
            double d = t.mu(k, i) - t.mu(k, 0) - t.mu(0, i) + t.mu(0, 0);
            if (std::fabs(d) > rel * scale) return false;
        }
    }
    return true;
}

namespace detail {

inline void fill_rows(SweepTable& tab, const std::vector<SpectralPoint>& pts) {
    for (const auto& p : pts) {
        tab.s_A.push_back(p.s_A);
        tab.s_B1C.push_back(p.s_B1C);
        tab.gaps.push_back(std::fabs(p.s_A - tab.reference_limit));
        tab.row_status.push_back(!p.error.empty() ? "error: " + p.error : p.existence ? "exists" : "no_existence");
    }
}

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/// Gaps strictly shrink along `order` (indices into the table) and the last is within tol.
inline ClaimVerdict limit_claim(const SweepTable& tab, const std::string& name, const std::vector<std::size_t>& order,
                                double tol, std::size_t monotone_tail) {
    ClaimVerdict v;
    v.claim = name;
    v.threshold = tol;
    std::size_t n = order.size();
    v.measured = tab.gaps[order.back()];
    bool finite = true;
    for (auto i : order) finite = finite && std::isfinite(tab.gaps[i]);
    bool monotone = true;
    std::size_t first = n > monotone_tail ? n - monotone_tail : 0;
    for (std::size_t j = first + 1; j < n; ++j) monotone = monotone && tab.gaps[order[j]] < tab.gaps[order[j - 1]];
    v.passed = finite && monotone && v.measured <= tol;
    v.detail = "final gap " + fmt(v.measured) + (monotone ? ", gaps decreasing" : ", gaps not decreasing");
    return v;
}

}  // namespace detail

/// s^D(A) over a ladder of diffusion rates with the limit and bound claims.
inline SweepTable sweep_diffusion_rate(const ScenarioConfig& cfg, std::vector<double> D_values,
                                       const SweepOptions& opt = {}) {
    if (D_values.empty()) fail(ErrorKind::config, "values", "sweep needs at least one value");
    for (double d : D_values) {
        if (!(d > 0.0)) fail(ErrorKind::config, "values", "diffusion rates must be positive");
    }
    std::sort(D_values.begin(), D_values.end());
    SweepTable tab;
    tab.parameter = "D";
    tab.m = cfg.kernel.m;
    tab.values = D_values;
    const double rt = cfg.tol.root_tol;
    tab.reference_limit = undiffused_alpha_star(cfg);

    std::vector<SpectralPoint> pts(D_values.size());
    parallel_for(pts.size(), opt.jobs, [&](std::size_t i) {
        ScenarioConfig c = cfg;
        c.diffusion_rate = D_values[i];
        pts[i] = solve_point(c);
    });
    detail::fill_rows(tab, pts);
    const std::size_t n = D_values.size();

    // Gap to s(B₁+C) shrinks as D decreases.
    std::vector<std::size_t> down(n);
    for (std::size_t i = 0; i < n; ++i) down[i] = n - 1 - i;
    tab.verdicts.push_back(detail::limit_claim(tab, "D_to_0_limit", down, opt.limit_tol, n));

    // Upper bound −Dλ⁰ + λ¹ and strict decrease on the three largest rates.
    {
        ClaimVerdict ub{"upper_bound_large_D", true, -std::numeric_limits<double>::infinity(), opt.bound_tol, ""};
        ClaimVerdict dec{"decreasing_large_D", true, 0.0, 0.0, ""};
        std::size_t first = n >= 3 ? n - 3 : 0;
        for (std::size_t i = first; i < n; ++i) {
            double bound = -D_values[i] * pts[i].lambda0_K + pts[i].lambda1;
            double excess = tab.s_A[i] - bound;
            ub.measured = std::max(ub.measured, excess);
            if (!(excess <= opt.bound_tol)) ub.passed = false;
            if (i > first && !(tab.s_A[i] < tab.s_A[i - 1])) dec.passed = false;
        }
        ub.detail = "max excess over -D*lambda0+lambda1: " + detail::fmt(ub.measured);
        dec.detail = dec.passed ? "strictly decreasing" : "not strictly decreasing";
        tab.verdicts.push_back(ub);
        tab.verdicts.push_back(dec);
    }

    // s^D(A) ≥ s(B₁+C) − D.
    {
        ClaimVerdict lb{"lower_bound", true, std::numeric_limits<double>::infinity(), rt, ""};
        for (std::size_t i = 0; i < n; ++i) {
            double margin = tab.s_A[i] - (tab.reference_limit - D_values[i]);
            lb.measured = std::min(lb.measured, margin);
            if (!(margin >= -rt)) lb.passed = false;
        }
        lb.detail = "min margin above s(B1+C)-D: " + detail::fmt(lb.measured);
        tab.verdicts.push_back(lb);
    }

    if (mu_separable(tabulate_rates(cfg))) {
        ClaimVerdict mono{"decreasing_in_D_separable", true, 0.0, rt, ""};
        for (std::size_t i = 1; i < n; ++i) {
            double rise = tab.s_A[i] - tab.s_A[i - 1];
            mono.measured = std::max(mono.measured, rise);
            if (!(rise <= rt)) mono.passed = false;
        }
        mono.detail = "largest increase " + detail::fmt(mono.measured);
        tab.verdicts.push_back(mono);
    }
    return tab;
}

/// s(A_{γ,m,Ω}) over a ladder of dispersal ranges with the applicable limit claims.
inline SweepTable sweep_kernel_scaling(const ScenarioConfig& cfg, std::vector<double> gamma_values, double m,
                                       const SweepOptions& opt = {}) {
    if (gamma_values.empty()) fail(ErrorKind::config, "values", "sweep needs at least one value");
    for (double g : gamma_values) {
        if (!(g > 0.0)) fail(ErrorKind::config, "values", "gamma values must be positive");
    }
    if (m < 0.0) fail(ErrorKind::config, "m", "m must be nonnegative");
    std::sort(gamma_values.begin(), gamma_values.end());
    SweepTable tab;
    tab.parameter = "gamma";
    tab.m = m;
    tab.values = gamma_values;
    const double rt = cfg.tol.root_tol;
    const double alpha1 = undiffused_alpha_star(cfg);
    const double D = cfg.diffusion_rate;
    const std::size_t n = gamma_values.size();
    const bool toward_infinity = gamma_values.back() > 1.0;
    const bool toward_zero = gamma_values.front() < 1.0;
    // The large-γ target carries the killing term only for m = 0.
    tab.reference_limit = toward_infinity && m == 0.0 ? alpha1 - D : alpha1;

    std::vector<SpectralPoint> pts(n);
    parallel_for(n, opt.jobs, [&](std::size_t i) {
        ScenarioConfig c = cfg;
        c.kernel.gamma = gamma_values[i];
        c.kernel.m = m;
        pts[i] = solve_point(c);
    });
    detail::fill_rows(tab, pts);

    if (toward_infinity) {
        std::vector<std::size_t> up(n);
        for (std::size_t i = 0; i < n; ++i) up[i] = i;
        tab.verdicts.push_back(detail::limit_claim(tab, "gamma_to_infinity_limit", up, opt.limit_tol, 3));
    }
    if (toward_zero && cfg.rates.smooth_c2 && m < 2.0) {
        double target = alpha1;
        ClaimVerdict v;
        std::vector<double> gz(n);
        for (std::size_t i = 0; i < n; ++i) gz[i] = std::fabs(tab.s_A[i] - target);
        v.claim = "gamma_to_0_limit";
        v.threshold = opt.limit_tol;
        v.measured = gz.front();
        bool monotone = true;
        for (std::size_t i = 1; i < std::min<std::size_t>(n, 3); ++i) monotone = monotone && gz[i - 1] < gz[i];
        v.passed = std::isfinite(v.measured) && monotone && v.measured <= opt.limit_tol;
        v.detail = "gap to s(B1+C) at smallest gamma " + detail::fmt(v.measured) +
                   (monotone ? ", gaps decreasing" : ", gaps not decreasing");
        tab.verdicts.push_back(v);
    }
    if (m == 0.0 && cfg.rates.mu_radial_monotone) {
        ClaimVerdict mono{"nonincreasing_in_gamma", true, 0.0, rt, ""};
        for (std::size_t i = 1; i < n; ++i) {
            double rise = tab.s_A[i] - tab.s_A[i - 1];
            mono.measured = std::max(mono.measured, rise);
            if (!(rise <= rt)) mono.passed = false;
        }
        mono.detail = "largest increase " + detail::fmt(mono.measured);
        tab.verdicts.push_back(mono);
    }
    if (tab.verdicts.empty()) {
        tab.verdicts.push_back({"no_applicable_claim", false, 0.0, 0.0,
                                "ladder and flags admit no limit or monotonicity claim"});
    }
    return tab;
}

// ---------------------------------------------------------------------------
// Perturbation properties

struct PerturbationSpec {
    double beta_bump = 0.2;
    double mu_bump = 0.2;
    double mu_shift = 0.1;
    int random_trials = 20;
    double random_eps = 0.05;
    double nested_fraction = 0.8;  ///< |Ω₁| / |Ω₂|
    double gamma_jitter = 0.05;
};

struct PropertyCheck {
    std::string name;
    bool passed = true;
    bool skipped = false;
    double measured = 0.0;
    double bound = 0.0;
    std::string note;
};

struct PropertyReport {
    double base_s_A = 0.0;
    std::vector<PropertyCheck> checks;
    double max_lipschitz_ratio = 0.0;  ///< max |Δs_A| / ‖Δμ‖_∞ over the random trials

    bool all_passed() const {
        for (const auto& c : checks) if (!c.skipped && !c.passed) return false;
        return true;
    }
};

namespace detail {

inline std::string bump_expr(double amp, double center, double width) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.17g*max(0, 1-((x-(%.17g))/%.17g)^2)", amp, center, width);
    return buf;
}

}  // namespace detail

inline PropertyReport check_monotonicity_properties(const ScenarioConfig& cfg_in, const PerturbationSpec& spec = {}) {
    PropertyReport rep;
    const double rt = cfg_in.tol.root_tol;

    // Every solve shares the base age grid: declare a μ lower bound that the
    // downward perturbations cannot cross.
    ScenarioConfig base = cfg_in;
    if (!base.rates.mu_lower_bound && !base.rates.beta_cutoff_age && !base.age.horizon) {
        double mt = base.mu_tilde();
        base.rates.mu_lower_bound = mt - spec.random_eps > 0.0 ? mt - spec.random_eps : 0.5 * mt;
    }
    SpectralProblem bp = SpectralProblem::build(base);
    SpectralReport br = solve_spectral_bound(bp, SolveOptions{false, false, 0});
    rep.base_s_A = br.s_A;
    const double s0 = br.s_A;
    const double center = 0.5 * (base.domain.lower + base.domain.upper);
    const double width = 0.25 * (base.domain.upper - base.domain.lower);

    auto solve = [&](const ScenarioConfig& c, PropertyCheck& chk) -> std::optional<SpectralPoint> {
        SpectralPoint p = solve_point(c);
        if (!p.error.empty()) {
            chk.skipped = true;
            chk.note = "perturbed solve failed: " + p.error;
            return std::nullopt;
        }
        if (!p.existence) {
            chk.skipped = true;
            chk.note = "perturbed scenario has no principal eigenvalue";
            return std::nullopt;
        }
        return p;
    };

    {
        PropertyCheck chk{"beta_increase", true, false, 0.0, rt, ""};
        ScenarioConfig c = base;
        c.rates.beta_field = add_fields(c.rates.beta_field, ScalarField(detail::bump_expr(spec.beta_bump, center, width)));
        if (auto p = solve(c, chk)) {
            chk.measured = s0 - p->s_A;
            chk.passed = chk.measured <= rt;
            chk.note = "drop in s_A after raising beta";
        }
        rep.checks.push_back(chk);
    }
    {
        PropertyCheck chk{"mu_increase", true, false, 0.0, rt, ""};
        ScenarioConfig c = base;
        c.rates.mu_field = add_fields(c.rates.mu_field, ScalarField(detail::bump_expr(spec.mu_bump, center, width)));
        if (auto p = solve(c, chk)) {
            chk.measured = p->s_A - s0;
            chk.passed = chk.measured <= rt;
            chk.note = "rise in s_A after raising mu";
        }
        rep.checks.push_back(chk);
    }
    {
        PropertyCheck chk{"mu_shift", true, false, 0.0, spec.mu_shift + 10.0 * rt, ""};
        ScenarioConfig c = base;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", spec.mu_shift);
        c.rates.mu_field = add_fields(c.rates.mu_field, ScalarField(buf));
        if (auto p = solve(c, chk)) {
            chk.measured = s0 - p->s_A;
            chk.passed = chk.measured >= -rt && chk.measured <= chk.bound;
            chk.note = "drop in s_A after a uniform mu shift";
        }
        rep.checks.push_back(chk);
    }
    {
        PropertyCheck chk{"mu_lipschitz", true, false, 0.0, spec.random_eps + 10.0 * rt, ""};
        RateTables t = bp.tables;
        std::mt19937_64 rng(base.seed);
        std::uniform_real_distribution<double> dist(-spec.random_eps, spec.random_eps);
        int done = 0;
        for (int trial = 0; trial < spec.random_trials; ++trial) {
            // Age-independent perturbations keep the one-cell propagators cacheable.
            auto tab = std::make_shared<Table2D>();
            tab->ages = {0.0};
            tab->positions = t.xgrid.nodes;
            tab->values.resize(tab->ages.size() * tab->positions.size());
            for (double& v : tab->values) v = dist(rng);
            // Pin the sup norm to ε exactly at one node.
            std::size_t pin = rng() % tab->values.size();
            tab->values[pin] = (rng() & 1u) ? spec.random_eps : -spec.random_eps;
            ScenarioConfig c = base;
            c.rates.mu_field = add_fields(c.rates.mu_field, ScalarField(std::shared_ptr<const Table2D>(tab)));
            PropertyCheck sub;
            auto p = solve(c, sub);
            if (!p) continue;
            ++done;
            double d = std::fabs(p->s_A - s0);
            chk.measured = std::max(chk.measured, d);
            rep.max_lipschitz_ratio = std::max(rep.max_lipschitz_ratio, d / spec.random_eps);
            if (!(d <= chk.bound)) chk.passed = false;
        }
        chk.skipped = done == 0;
        chk.note = std::to_string(done) + " of " + std::to_string(spec.random_trials) + " perturbations solved";
        rep.checks.push_back(chk);
    }
    {
        PropertyCheck chk{"nested_domain", true, false, 0.0, 0.0, ""};
        const std::size_t n = base.domain.n_x;
        const auto cut = static_cast<std::size_t>(std::lround(0.5 * (1.0 - spec.nested_fraction) * static_cast<double>(n - 1)));
        if (cut == 0 || 2 * cut + 3 > n) {
            chk.skipped = true;
            chk.note = "grid too coarse for the requested sub-domain";
        } else {
            const double h = bp.tables.xgrid.step();
            ScenarioConfig c = base;
            c.domain.lower = base.domain.lower + static_cast<double>(cut) * h;
            c.domain.upper = base.domain.upper - static_cast<double>(cut) * h;
            c.domain.n_x = n - 2 * cut;
            if (auto p = solve(c, chk)) {
                // C₀ = D‖J_γ‖_∞ / (γ^m min_{Ω₁} ψ) with max ψ = 1 over ages up to a₂.
                const auto& ef = br.eigfun;
                std::size_t rows = static_cast<std::size_t>(ef.rows());
                if (base.rates.beta_cutoff_age) {
                    rows = 0;
                    while (rows < bp.tables.n_a() && bp.tables.agrid.nodes[rows] <= *base.rates.beta_cutoff_age + 1e-12) ++rows;
                }
                auto block = ef.topRows(static_cast<Eigen::Index>(rows));
                double psi_max = block.maxCoeff();
                double psi_min = block.middleCols(static_cast<Eigen::Index>(cut), static_cast<Eigen::Index>(c.domain.n_x)).minCoeff() / psi_max;
                double C0 = bp.diffusion * base.kernel.sup_norm() * bp.kernel.renormalization / psi_min;
                double removed = (base.domain.upper - base.domain.lower) - (c.domain.upper - c.domain.lower);
                chk.measured = s0 - p->s_A;
                chk.bound = C0 * removed;
                chk.passed = chk.measured >= -rt && chk.measured <= chk.bound + rt;
                chk.note = "s_A(outer) - s_A(inner) against C0*|outer minus inner|, C0 = " + detail::fmt(C0);
            }
        }
        rep.checks.push_back(chk);
    }
    {
        PropertyCheck chk{"gamma_continuity", true, false, 0.0, 0.0, ""};
        const double g = base.kernel.gamma, dg = spec.gamma_jitter * g;
        std::vector<double> offsets{-dg, -0.5 * dg, 0.5 * dg, dg};
        std::vector<double> s(offsets.size());
        bool ok = true;
        for (std::size_t j = 0; j < offsets.size() && ok; ++j) {
            ScenarioConfig c = base;
            c.kernel.gamma = g + offsets[j];
            auto p = solve(c, chk);
            if (!p) ok = false;
            else s[j] = p->s_A;
        }
        if (ok) {
            // Local modulus from the half steps; full steps must respect it.
            double L = std::max(std::fabs(s[1] - s0), std::fabs(s[2] - s0)) / (0.5 * dg);
            double full = std::max(std::fabs(s[0] - s0), std::fabs(s[3] - s0));
            chk.measured = full;
            chk.bound = 2.5 * L * dg + 10.0 * rt;
            chk.passed = full <= chk.bound;
            chk.note = "fitted modulus " + detail::fmt(L) + " (diagnostic)";
        }
        rep.checks.push_back(chk);
    }
    return rep;
}

}  // namespace agespec
