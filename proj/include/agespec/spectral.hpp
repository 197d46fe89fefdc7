#pragma once

#include <agespec/error.hpp>
#include <agespec/evolution.hpp>
#include <agespec/kernel.hpp>
#include <agespec/power_iteration.hpp>
#include <agespec/scenario.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace agespec {

// ---------------------------------------------------------------------------
// Monotone root finding

struct RootResult {
    double root = 0.0;
    double value = 0.0;  ///< f(root)
    int evaluations = 0;
};

/// Solves f(t) = target for a nonincreasing f by bracket expansion from `start`
/// and bisection. `lower` is an open lower limit of the admissible set.
/// Stops when |f − target| ≤ ftol or the bracket is below roundoff.
inline RootResult solve_decreasing(const std::function<double(double)>& f, double target, double start, double lower,
                                   double ftol, const std::string& what) {
    RootResult r;
    auto eval = [&](double t) {
        ++r.evaluations;
        return f(t);
    };
    double lo, hi, flo, fhi;
    double f0 = eval(start);
    if (std::fabs(f0 - target) <= ftol) return {start, f0, r.evaluations};
    double step = 1.0;
    if (f0 > target) {
        lo = start;
        flo = f0;
        hi = start + step;
        fhi = eval(hi);
        int guard = 0;
        while (fhi > target) {
            if (++guard > 200) fail(ErrorKind::numerical, "bracket_failure", what + ": no upper bracket found");
            lo = hi;
            flo = fhi;
            step *= 2.0;
            hi = lo + step;
            fhi = eval(hi);
        }
    } else {
        hi = start;
        fhi = f0;
        int guard = 0;
        for (;;) {
            if (++guard > 200) fail(ErrorKind::numerical, "bracket_failure", what + ": characteristic equation unsolvable");
            double cand = hi - step;
            if (std::isfinite(lower) && cand <= lower) cand = 0.5 * (hi + lower);
            if (std::isfinite(lower) && hi - lower <= 1e-12 * std::max(1.0, std::fabs(lower))) {
                fail(ErrorKind::numerical, "bracket_failure", what + ": characteristic equation unsolvable");
            }
            double fc = eval(cand);
            if (fc >= target) {
                lo = cand;
                flo = fc;
                break;
            }
            hi = cand;
            fhi = fc;
            step *= 2.0;
        }
    }
    (void)flo;
    (void)fhi;
    for (int it = 0; it < 300; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = eval(mid);
        if (std::fabs(fm - target) <= ftol) return {mid, fm, r.evaluations};
        if (fm > target) lo = mid;
        else hi = mid;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(mid))) {
            return {mid, fm, r.evaluations};
        }
    }
    double mid = 0.5 * (lo + hi);
    return {mid, f(mid), r.evaluations};
}

// ---------------------------------------------------------------------------
// Characteristic function G_α(x)

struct CharacteristicProfile {
    double alpha = 0.0;
    std::vector<double> values;
    double max_value = 0.0;
    std::size_t argmax_index = 0;
};

/// G_α(x_i) = Σ_k w_k β(a_k,x_i) e^{−(α+D)a_k} π(0,a_k,x_i).
class Characteristic {
public:
    Characteristic(const RateTables& t, double diffusion) : ages_(t.agrid.nodes), D_(diffusion) {
        const auto na = static_cast<Eigen::Index>(t.n_a());
        const auto nx = static_cast<Eigen::Index>(t.n_x());
        coef_.resize(na, nx);
        for (Eigen::Index k = 0; k < na; ++k) {
            double a = ages_[static_cast<std::size_t>(k)];
            double w = t.agrid.quad_weights[static_cast<std::size_t>(k)];
            for (Eigen::Index i = 0; i < nx; ++i) {
                // Log form keeps e^{−Da} and e^{−αa} from under/overflowing separately.
                double wb = w * t.beta(k, i);
                coef_(k, i) = wb > 0.0 ? std::log(wb) - D_ * a - t.hazard(k, i) : -std::numeric_limits<double>::infinity();
            }
        }
        truncated_ = t.agrid.is_truncated;
        lower_ = truncated_ ? -D_ - t.mu_tilde : -std::numeric_limits<double>::infinity();
        // Keep e^{−α a} finite on finite horizons.
        if (!truncated_) lower_ = -700.0 / std::max(t.agrid.a_max, 1e-300) - D_;
    }

    /// Open lower limit of the admissible α.
    double lower_limit() const { return lower_; }
    std::size_t n_x() const { return static_cast<std::size_t>(coef_.cols()); }

    double at(double alpha, std::size_t i) const {
        check(alpha);
        double s = 0.0;
        for (Eigen::Index k = 0; k < coef_.rows(); ++k) {
            double c = coef_(k, static_cast<Eigen::Index>(i));
            if (c > -std::numeric_limits<double>::infinity()) s += std::exp(c - alpha * ages_[static_cast<std::size_t>(k)]);
        }
        return s;
    }

    CharacteristicProfile profile(double alpha) const {
        check(alpha);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(coef_.cols());
        for (Eigen::Index k = 0; k < coef_.rows(); ++k) {
            double shift = -alpha * ages_[static_cast<std::size_t>(k)];
            g.array() += (coef_.row(k).transpose().array() + shift).exp();
        }
        CharacteristicProfile p;
        p.alpha = alpha;
        p.values.assign(g.data(), g.data() + g.size());
        Eigen::Index arg = 0;
        p.max_value = g.maxCoeff(&arg);
        p.argmax_index = static_cast<std::size_t>(arg);
        return p;
    }

private:
    void check(double alpha) const {
        if (truncated_ && !(alpha > lower_)) {
            fail(ErrorKind::domain, "outside_V",
                 "alpha = " + std::to_string(alpha) + " is outside the admissible interval (" + std::to_string(lower_) +
                     ", inf)");
        }
    }

    std::vector<double> ages_;
    double D_;
    Eigen::MatrixXd coef_;  // n_a × n_x, log(w β) − D a − ∫μ
    bool truncated_ = false;
    double lower_;
};

inline CharacteristicProfile evaluate_characteristic(const ScenarioConfig& cfg, double alpha) {
    RateTables t = tabulate_rates(cfg);
    return Characteristic(t, cfg.effective_diffusion()).profile(alpha);
}

inline double solve_alpha_star(const Characteristic& G, double root_tol) {
    auto f = [&](double a) {
        if (!(a > G.lower_limit())) return std::numeric_limits<double>::infinity();
        return G.profile(a).max_value;
    };
    return solve_decreasing(f, 1.0, 0.0, G.lower_limit(), 0.01 * root_tol, "alpha**").root;
}

inline double solve_alpha_star(const ScenarioConfig& cfg) {
    RateTables t = tabulate_rates(cfg);
    return solve_alpha_star(Characteristic(t, cfg.effective_diffusion()), cfg.tol.root_tol);
}

/// Root of G(α, x_i) = 1; empty when β(·, x_i) cannot reach 1 inside V.
inline std::optional<double> solve_alpha_of_x(const Characteristic& G, std::size_t i, double root_tol) {
    auto f = [&](double a) {
        if (!(a > G.lower_limit())) return std::numeric_limits<double>::infinity();
        return G.at(a, i);
    };
    try {
        return solve_decreasing(f, 1.0, 0.0, G.lower_limit(), 0.01 * root_tol, "alpha(x)").root;
    } catch (const Error& e) {
        if (e.code() == "bracket_failure") return std::nullopt;
        throw;
    }
}

inline std::optional<double> solve_alpha_of_x(const ScenarioConfig& cfg, std::size_t x_index) {
    RateTables t = tabulate_rates(cfg);
    if (x_index >= t.n_x()) fail(ErrorKind::domain, "index", "x_index out of range");
    return solve_alpha_of_x(Characteristic(t, cfg.effective_diffusion()), x_index, cfg.tol.root_tol);
}

// ---------------------------------------------------------------------------
// M_λ and the spectral bound

/// Everything needed to evaluate M_λ and F_λ for one scenario.
struct SpectralProblem {
    ScenarioConfig cfg;
    RateTables tables;
    DiscreteKernelOperator kernel;
    PropagatorStack stack;
    double lambda0_K = 0.0;  ///< λ⁰ = 1 − r(K)
    double diffusion = 0.0;  ///< effective D

    static SpectralProblem build(const ScenarioConfig& cfg) {
        SpectralProblem p;
        p.cfg = cfg;
        p.tables = tabulate_rates(cfg);
        p.kernel = build_kernel_matrix(cfg.kernel, p.tables.xgrid);
        p.diffusion = cfg.effective_diffusion();
        p.stack = compute_diffused_propagator(cfg, p.kernel);
        p.lambda0_K = 1.0 - spectral_radius(p.kernel.matrix, 1e-13, 200000).radius;
        return p;
    }

    /// Open lower limit of admissible λ (Ṽ on truncated infinite horizons).
    double lambda_lower_limit() const {
        if (tables.agrid.is_truncated) return -diffusion * lambda0_K - tables.mu_tilde;
        return -700.0 / tables.agrid.a_max;
    }
};

/// M_λ = Σ_k w_k e^{−λ a_k} diag(β(a_k,·)) U(0,a_k).
inline Eigen::MatrixXd assemble_M_lambda(const RateTables& t, const PropagatorStack& stack, double lambda) {
    if (stack.n_a() != t.n_a() || stack.n_x() != t.n_x()) {
        fail(ErrorKind::domain, "mismatch", "propagator stack does not match the rate grid");
    }
    const auto nx = static_cast<Eigen::Index>(t.n_x());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nx, nx);
    for (std::size_t k = 0; k < t.n_a(); ++k) {
        auto K = static_cast<Eigen::Index>(k);
        const double w = t.agrid.quad_weights[k];
        if (w == 0.0 || t.beta.row(K).maxCoeff() == 0.0) continue;
        double c;
        if (!propagator_weight(stack, k, std::log(w) - lambda * t.agrid.nodes[k], c)) continue;
        Eigen::VectorXd d = c * t.beta.row(K).transpose();
        M.noalias() += d.asDiagonal() * stack.scaled[k];
    }
    return M;
}

inline Eigen::MatrixXd assemble_M_lambda(const SpectralProblem& p, double lambda) {
    if (p.tables.agrid.is_truncated && !(lambda > p.lambda_lower_limit())) {
        fail(ErrorKind::domain, "outside_V", "lambda = " + std::to_string(lambda) + " is below the admissible interval");
    }
    return assemble_M_lambda(p.tables, p.stack, lambda);
}

struct SpectralReport {
    double s_B1C = 0.0;
    double s_A = 0.0;
    double lambda0_K = 0.0;
    std::vector<std::optional<double>> alpha_of_x;
    Eigen::VectorXd eigvec_age0;
    Eigen::MatrixXd eigfun;  ///< n_a × n_x, φ(a_k, x_i)
    double r_M = 1.0;        ///< r(M_λ) at the returned λ
    double residual_M = 0.0;
    double renewal_residual = 0.0;
    double spectral_gap = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::pair<double, double>> r_F_samples;
    int bisection_steps = 0;
    bool dense_fallback = false;  ///< final r(M) came from the dense eigensolver

    /// s_A > s_B1C + 10·root_tol and φ(0,·) > 0.
    bool existence(double root_tol) const {
        return s_A > s_B1C + 10.0 * root_tol && eigvec_age0.size() > 0 && eigvec_age0.minCoeff() > 0.0;
    }
};

struct SolveOptions {
    bool spectral_gap = true;
    bool sample_F = false;
    int F_samples = 6;
};

class FLambdaOperator;
inline double spectral_radius_F(const SpectralProblem& p, double alpha_star, double lambda);

inline SpectralReport solve_spectral_bound(const SpectralProblem& p, const SolveOptions& opt = {}) {
    const auto& cfg = p.cfg;
    const double rt = cfg.tol.root_tol;
    const double pt = cfg.tol.power_iter_tol;
    SpectralReport rep;
    rep.lambda0_K = p.lambda0_K;

    Characteristic G(p.tables, p.diffusion);
    rep.s_B1C = solve_alpha_star(G, rt);
    rep.alpha_of_x.resize(p.tables.n_x());
    for (std::size_t i = 0; i < p.tables.n_x(); ++i) rep.alpha_of_x[i] = solve_alpha_of_x(G, i, rt);

    const auto nx = static_cast<Eigen::Index>(p.tables.n_x());
    auto radius = [&](double lambda) { return spectral_radius_robust(assemble_M_lambda(p, lambda), 0.1 * pt, cfg.tol.max_iters); };

    if (p.diffusion == 0.0) {
        // Without diffusion M_λ is diagonal and λ₀ coincides with α**.
        rep.s_A = rep.s_B1C;
    } else {
        const double lower = p.lambda_lower_limit();
        auto f = [&](double lambda) {
            if (!(lambda > lower)) return std::numeric_limits<double>::infinity();
            return radius(lambda).radius;
        };
        // M_{α**} ≥ diag(G_{α**}) entrywise, so r(M) ≥ 1 there.
        // At high diffusion α** can fall below the admissible interval.
        double start = rep.s_B1C - 10.0 * rt;
        if (!(start > lower)) start = lower + 1.0;
        double ftol = std::min(rt, 0.5 * pt);
        RootResult root;
        try {
            root = solve_decreasing(f, 1.0, start, lower, ftol, "lambda0");
        } catch (const Error& e) {
            if (e.code() != "bracket_failure") throw;
            fail(ErrorKind::numerical, "below_search_window", "spectral bound below search window: " + std::string(e.what()));
        }
        rep.s_A = root.root;
        rep.bisection_steps = root.evaluations;
    }

    Eigen::MatrixXd M = assemble_M_lambda(p.tables, p.stack, rep.s_A);
    PowerResult pr = spectral_radius_robust(M, 0.1 * pt, cfg.tol.max_iters);
    rep.r_M = pr.radius;
    rep.dense_fallback = pr.dense_fallback;
    if (p.diffusion == 0.0) {
        Eigen::Index arg;
        M.diagonal().maxCoeff(&arg);
        pr.vector = Eigen::VectorXd::Zero(nx);
        pr.vector[arg] = 1.0;
    }
    rep.eigvec_age0 = pr.vector / pr.vector.maxCoeff();
    rep.residual_M = (M * rep.eigvec_age0 - rep.eigvec_age0).cwiseAbs().maxCoeff();

    const std::size_t na = p.tables.n_a();
    rep.eigfun.resize(static_cast<Eigen::Index>(na), nx);
    Eigen::VectorXd births = Eigen::VectorXd::Zero(nx);
    for (std::size_t k = 0; k < na; ++k) {
        Eigen::VectorXd phi = Eigen::VectorXd::Zero(nx);
        double c;
        if (propagator_weight(p.stack, k, -rep.s_A * p.tables.agrid.nodes[k], c)) {
            phi.noalias() = c * (p.stack.scaled[k] * rep.eigvec_age0);
        }
        rep.eigfun.row(static_cast<Eigen::Index>(k)) = phi.transpose();
        births += p.tables.agrid.quad_weights[k] *
                  p.tables.beta.row(static_cast<Eigen::Index>(k)).transpose().cwiseProduct(phi);
    }
    rep.renewal_residual = (rep.eigvec_age0 - births).cwiseAbs().maxCoeff();

    if (opt.spectral_gap) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
        std::vector<double> mags;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) mags.push_back(std::abs(es.eigenvalues()[i]));
        std::sort(mags.rbegin(), mags.rend());
        rep.spectral_gap = mags.size() > 1 && mags[0] > 0 ? mags[1] / mags[0] : 0.0;
    }

    if (opt.sample_F && p.diffusion > 0.0) {
        double span = std::max(rep.s_A - rep.s_B1C, 0.0) + 1.0;
        for (int j = 1; j <= opt.F_samples; ++j) {
            double lam = rep.s_B1C + span * j / opt.F_samples;
            rep.r_F_samples.emplace_back(lam, spectral_radius_F(p, rep.s_B1C, lam));
        }
    }
    return rep;
}

inline SpectralReport solve_spectral_bound(const ScenarioConfig& cfg, const SolveOptions& opt = {}) {
    return solve_spectral_bound(SpectralProblem::build(cfg), opt);
}

// ---------------------------------------------------------------------------
// F_λ = B₂(λ − B₁ − C)^{−1}

/// Matrix-free action of F_λ on the stacked vector (η, ψ), with ψ stored age-major.
///
/// The Volterra part ∫₀^a e^{−(λ+D)(a−s)}π(s,a,x)ψ(s)ds is integrated cell by
/// cell with ψ linear and the decay factor exponential in s, which is exact
/// at both cell ends.
class FLambdaOperator {
public:
    FLambdaOperator(const SpectralProblem& p, double alpha_star, double lambda)
        : p_(p), lambda_(lambda), D_(p.diffusion) {
        if (!(lambda > alpha_star)) {
            fail(ErrorKind::domain, "pole", "F_lambda needs lambda > alpha** (got " + std::to_string(lambda) + ")");
        }
        const auto& t = p.tables;
        const std::size_t na = t.n_a(), nx = t.n_x();
        const double h = t.agrid.step();
        const auto NA = static_cast<Eigen::Index>(na), NX = static_cast<Eigen::Index>(nx);
        E_.resize(NA, NX);
        c0_.resize(NA, NX);
        c1_.resize(NA, NX);
        decay0_.resize(NA, NX);
        birth_.resize(NA, NX);
        Characteristic G(t, D_);
        CharacteristicProfile g = G.profile(lambda);
        inv_one_minus_G_.resize(NX);
        for (Eigen::Index i = 0; i < NX; ++i) {
            double q = 1.0 - g.values[static_cast<std::size_t>(i)];
            if (!(q > 0.0)) fail(ErrorKind::domain, "pole", "1 - G_lambda vanishes; lambda too close to alpha**");
            inv_one_minus_G_[i] = 1.0 / q;
        }
        for (Eigen::Index k = 0; k < NA; ++k) {
            double a = t.agrid.nodes[static_cast<std::size_t>(k)];
            for (Eigen::Index i = 0; i < NX; ++i) {
                decay0_(k, i) = std::exp(-(lambda + D_) * a - t.hazard(k, i));
                birth_(k, i) = t.agrid.quad_weights[static_cast<std::size_t>(k)] * t.beta(k, i);
                if (k == 0) {
                    E_(k, i) = c0_(k, i) = c1_(k, i) = 0.0;
                    continue;
                }
                double z = (lambda + D_) * h + (t.hazard(k, i) - t.hazard(k - 1, i));
                double I0, I1;
                if (std::fabs(z) < 1e-4) {
                    I0 = 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0;
                    I1 = 0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0;
                } else {
                    double ez = std::exp(-z);
                    I0 = (1.0 - ez) / z;
                    I1 = (1.0 - ez * (1.0 + z)) / (z * z);
                }
                E_(k, i) = std::exp(-z);
                c0_(k, i) = h * I1;
                c1_(k, i) = h * (I0 - I1);
            }
        }
    }

    Eigen::Index size() const { return p_.tables.agrid.size() * p_.tables.n_x() + p_.tables.n_x(); }

    /// out = F_λ (η, ψ); the η block of the result is always zero.
    void apply(const Eigen::VectorXd& in, Eigen::VectorXd& out) const {
        const auto NA = static_cast<Eigen::Index>(p_.tables.n_a());
        const auto NX = static_cast<Eigen::Index>(p_.tables.n_x());
        Eigen::Map<const Eigen::VectorXd> eta(in.data(), NX);
        Eigen::Map<const Eigen::MatrixXd> psi(in.data() + NX, NX, NA);  // column k = ψ(a_k, ·)
        Eigen::MatrixXd W(NX, NA);
        W.col(0).setZero();
        for (Eigen::Index k = 1; k < NA; ++k) {
            W.col(k) = E_.row(k).transpose().cwiseProduct(W.col(k - 1)) +
                       c0_.row(k).transpose().cwiseProduct(psi.col(k - 1)) +
                       c1_.row(k).transpose().cwiseProduct(psi.col(k));
        }
        Eigen::VectorXd num = eta;
        for (Eigen::Index k = 0; k < NA; ++k) num += birth_.row(k).transpose().cwiseProduct(W.col(k));
        Eigen::VectorXd eta_t = num.cwiseProduct(inv_one_minus_G_);
        Eigen::MatrixXd Z = W;
        for (Eigen::Index k = 0; k < NA; ++k) Z.col(k) += decay0_.row(k).transpose().cwiseProduct(eta_t);
        out.resize(in.size());
        out.head(NX).setZero();
        Eigen::Map<Eigen::MatrixXd> res(out.data() + NX, NX, NA);
        res.noalias() = D_ * (p_.kernel.matrix * Z);
    }

private:
    const SpectralProblem& p_;
    double lambda_;
    double D_;
    Eigen::MatrixXd E_, c0_, c1_, decay0_, birth_;  // n_a × n_x
    Eigen::VectorXd inv_one_minus_G_;
};

inline double spectral_radius_F(const SpectralProblem& p, double alpha_star, double lambda) {
    FLambdaOperator F(p, alpha_star, lambda);
    return power_iteration([&](const Eigen::VectorXd& v, Eigen::VectorXd& out) { F.apply(v, out); }, F.size(),
                           p.cfg.tol.power_iter_tol, p.cfg.tol.max_iters)
        .radius;
}

inline double spectral_radius_F(const ScenarioConfig& cfg, double lambda) {
    SpectralProblem p = SpectralProblem::build(cfg);
    Characteristic G(p.tables, p.diffusion);
    return spectral_radius_F(p, solve_alpha_star(G, cfg.tol.root_tol), lambda);
}

// ---------------------------------------------------------------------------
// x-independent rates

/// Root ϖ of Σ_k w_k b(a_k) e^{−ϖ a_k} e^{−H(a_k)} = 1.
inline double lotka_root(const AgeGrid& ag, const std::vector<double>& b, const std::vector<double>& H,
                         double lower, double root_tol) {
    auto f = [&](double s) {
        if (!(s > lower)) return std::numeric_limits<double>::infinity();
        double sum = 0.0;
        for (std::size_t k = 0; k < ag.size(); ++k) {
            if (b[k] != 0.0) sum += ag.quad_weights[k] * b[k] * std::exp(-s * ag.nodes[k] - H[k]);
        }
        return sum;
    };
    return solve_decreasing(f, 1.0, 0.0, lower, 0.01 * root_tol, "Lotka equation").root;
}

/// λ¹ from the envelope rates β̄ and μ̲.
inline double envelope_lambda1(const RateTables& t, double root_tol) {
    double lower = t.agrid.is_truncated ? -t.mu_tilde : -700.0 / t.agrid.a_max;
    return lotka_root(t.agrid, t.beta_hi, t.hazard_lo, lower, root_tol);
}

/// ϖ_env from β̲ and π̄; λ₁ = ϖ_env − Dλ⁰ is a lower bound for s(A).
inline double envelope_varpi_lower(const RateTables& t, double root_tol) {
    double lower = t.agrid.is_truncated ? -t.mu_tilde : -700.0 / t.agrid.a_max;
    return lotka_root(t.agrid, t.beta_lo, t.hazard_hi, lower, root_tol);
}

struct HomogeneousPrediction {
    double varpi = 0.0;
    double lambda0_K = 0.0;
    double predicted_s_B1C = 0.0;
    double predicted_s_A = 0.0;
    double lambda1_envelope = 0.0;
};

inline HomogeneousPrediction homogeneous_closed_form(const ScenarioConfig& cfg, const RateTables& t,
                                                     const DiscreteKernelOperator& K) {
    if (!t.x_independent()) {
        fail(ErrorKind::domain, "not_homogeneous", "homogeneous_closed_form needs x-independent rates");
    }
    HomogeneousPrediction h;
    std::vector<double> b(t.n_a()), H(t.n_a());
    for (std::size_t k = 0; k < t.n_a(); ++k) {
        b[k] = t.beta(static_cast<Eigen::Index>(k), 0);
        H[k] = t.hazard(static_cast<Eigen::Index>(k), 0);
    }
    double lower = t.agrid.is_truncated ? -t.mu_tilde : -700.0 / t.agrid.a_max;
    h.varpi = lotka_root(t.agrid, b, H, lower, cfg.tol.root_tol);
    h.lambda0_K = 1.0 - spectral_radius(K.matrix, 1e-13, 200000).radius;
    const double D = cfg.effective_diffusion();
    h.predicted_s_B1C = h.varpi - D;
    h.predicted_s_A = h.varpi - D * h.lambda0_K;
    h.lambda1_envelope = envelope_lambda1(t, cfg.tol.root_tol);
    return h;
}

inline HomogeneousPrediction homogeneous_closed_form(const ScenarioConfig& cfg) {
    RateTables t = tabulate_rates(cfg);
    return homogeneous_closed_form(cfg, t, build_kernel_matrix(cfg.kernel, t.xgrid));
}

}  // namespace agespec
