#pragma once

#include <agespec/error.hpp>
#include <agespec/expression.hpp>
#include <agespec/grid.hpp>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace agespec {

/// Values on a tensor (age, position) lattice with bilinear interpolation.
/// Queries outside the lattice are clamped to its edge.
struct Table2D {
    std::vector<double> ages;
    std::vector<double> positions;
    std::vector<double> values;  // row-major: ages outer, positions inner

    double at(std::size_t k, std::size_t i) const { return values[k * positions.size() + i]; }

    double operator()(double a, double x) const {
        auto locate = [](const std::vector<double>& axis, double t, std::size_t& lo, double& s) {
            if (axis.size() == 1 || t <= axis.front()) { lo = 0; s = 0.0; return; }
            if (t >= axis.back()) { lo = axis.size() - 2; s = 1.0; return; }
            auto it = std::upper_bound(axis.begin(), axis.end(), t);
            lo = static_cast<std::size_t>(it - axis.begin()) - 1;
            s = (t - axis[lo]) / (axis[lo + 1] - axis[lo]);
        };
        std::size_t k, i;
        double sa, sx;
        locate(ages, a, k, sa);
        locate(positions, x, i, sx);
        std::size_t k1 = ages.size() == 1 ? k : k + 1;
        std::size_t i1 = positions.size() == 1 ? i : i + 1;
        return (1 - sa) * ((1 - sx) * at(k, i) + sx * at(k, i1)) +
               sa * ((1 - sx) * at(k1, i) + sx * at(k1, i1));
    }
};

/// A rate given by an expression, a table, or the sum of both.
struct ScalarField {
    std::optional<Expression> expr;
    std::shared_ptr<const Table2D> table;
    std::shared_ptr<const ScalarField> addend;  ///< perturbation term, if any

    ScalarField() = default;
    explicit ScalarField(const std::string& text) : expr(Expression(text)) {}
    explicit ScalarField(std::shared_ptr<const Table2D> t) : table(std::move(t)) {}

    double operator()(double a, double x) const {
        double v = 0.0;
        if (expr) v += (*expr)(a, x);
        if (table) v += (*table)(a, x);
        if (addend) v += (*addend)(a, x);
        return v;
    }

    bool empty() const { return !expr && !table && !addend; }

    bool composite() const { return addend || (expr && table); }
};

/// base + extra, keeping base's own terms intact.
inline ScalarField add_fields(const ScalarField& base, const ScalarField& extra) {
    ScalarField out = base;
    if (out.addend) out.addend = std::make_shared<const ScalarField>(add_fields(*out.addend, extra));
    else out.addend = std::make_shared<const ScalarField>(extra);
    return out;
}

/// Rate tables in CSV form with header `a,x,beta,mu`; rows must cover a full
/// tensor lattice in any order.
struct RateCsv {
    std::shared_ptr<const Table2D> beta;
    std::shared_ptr<const Table2D> mu;
};

inline RateCsv parse_rate_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    struct Row { double a, x, beta, mu; };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++line_no;
        line.erase(0, line.find_first_not_of(" \t\r"));
        if (auto p = line.find_last_not_of(" \t\r"); p != std::string::npos) line.erase(p + 1);
        if (line.empty()) continue;
        if (!header_seen) {
            std::string compact;
            for (char c : line) if (c != ' ' && c != '\t') compact += c;
            if (compact != "a,x,beta,mu") {
                fail(ErrorKind::config, "rate_table", "rate table header must be 'a,x,beta,mu'");
            }
            header_seen = true;
            continue;
        }
        std::vector<double> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                double v = std::stod(cell, &used);
                cells.push_back(v);
            } catch (const std::exception&) {
                fail(ErrorKind::config, "rate_table",
                     "rate table row " + std::to_string(line_no) + ": cannot parse '" + cell + "'");
            }
        }
        if (cells.size() != 4) {
            fail(ErrorKind::config, "rate_table",
                 "rate table row " + std::to_string(line_no) + ": expected 4 columns, got " +
                     std::to_string(cells.size()));
        }
        for (double v : cells) {
            if (!std::isfinite(v)) {
                fail(ErrorKind::config, "rate_table",
                     "rate table row " + std::to_string(line_no) + ": non-finite value");
            }
        }
        rows.push_back({cells[0], cells[1], cells[2], cells[3]});
    }
    if (!header_seen || rows.empty()) fail(ErrorKind::config, "rate_table", "rate table is empty");

    std::vector<double> ages, xs;
    for (const auto& r : rows) { ages.push_back(r.a); xs.push_back(r.x); }
    std::sort(ages.begin(), ages.end());
    ages.erase(std::unique(ages.begin(), ages.end()), ages.end());
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    if (ages.size() * xs.size() != rows.size()) {
        fail(ErrorKind::config, "rate_table",
             "rate table shape: " + std::to_string(rows.size()) + " rows do not form a " +
                 std::to_string(ages.size()) + "x" + std::to_string(xs.size()) + " lattice");
    }
    auto beta = std::make_shared<Table2D>();
    auto mu = std::make_shared<Table2D>();
    beta->ages = mu->ages = ages;
    beta->positions = mu->positions = xs;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    beta->values.assign(rows.size(), nan);
    mu->values.assign(rows.size(), nan);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::size_t k = static_cast<std::size_t>(std::lower_bound(ages.begin(), ages.end(), rows[r].a) - ages.begin());
        std::size_t i = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), rows[r].x) - xs.begin());
        std::size_t idx = k * xs.size() + i;
        if (!std::isnan(beta->values[idx])) {
            fail(ErrorKind::config, "rate_table", "rate table row " + std::to_string(r + 1) + " duplicates a lattice point");
        }
        beta->values[idx] = rows[r].beta;
        mu->values[idx] = rows[r].mu;
    }
    return {beta, mu};
}

inline std::string format_rate_csv(const Table2D& beta, const Table2D& mu) {
    std::ostringstream out;
    out.precision(17);
    out << "a,x,beta,mu\n";
    for (std::size_t k = 0; k < beta.ages.size(); ++k) {
        for (std::size_t i = 0; i < beta.positions.size(); ++i) {
            out << beta.ages[k] << ',' << beta.positions[i] << ',' << beta.at(k, i) << ',' << mu.at(k, i) << '\n';
        }
    }
    return out.str();
}

/// Birth and death rates β(a,x), μ(a,x).
struct RateField {
    ScalarField beta_field{"0"};
    ScalarField mu_field{"1"};
    std::optional<double> beta_cutoff_age;
    std::optional<double> mu_lower_bound;
    bool smooth_c2 = false;           ///< rates declared twice differentiable in x
    bool mu_radial_monotone = false;  ///< μ radially symmetric and non-decreasing in |x|

    double beta(double a, double x) const {
        if (beta_cutoff_age && a >= *beta_cutoff_age) return 0.0;
        return beta_field(a, x);
    }
    /// β without the cutoff; used for the left limit at a = a₂.
    double beta_uncut(double a, double x) const { return beta_field(a, x); }
    double mu(double a, double x) const { return mu_field(a, x); }
};

/// Three-point Gauss–Legendre rule on [0,1].
struct CellRule {
    std::array<double, 3> nodes;
    std::array<double, 3> weights;
    CellRule() {
        using Q = boost::math::quadrature::gauss<double, 3>;
        // Boost stores the nonnegative abscissae of the symmetric rule on [-1,1].
        const auto& z = Q::abscissa();
        const auto& w = Q::weights();
        nodes = {0.5 * (1 - z[1]), 0.5, 0.5 * (1 + z[1])};
        weights = {0.5 * w[1], 0.5 * w[0], 0.5 * w[1]};
    }
};

inline const CellRule& cell_rule() {
    static const CellRule rule;
    return rule;
}

/// ∫_τ^a μ(s, x) ds by composite Gauss–Legendre.
inline double cumulative_hazard(const RateField& rates, double x, double tau, double a) {
    if (a <= tau) return 0.0;
    const auto& rule = cell_rule();
    int cells = std::max(1, static_cast<int>(std::ceil((a - tau) / 0.02)));
    double h = (a - tau) / cells;
    double sum = 0.0;
    for (int c = 0; c < cells; ++c) {
        double s0 = tau + h * c;
        for (int q = 0; q < 3; ++q) sum += rule.weights[q] * rates.mu(s0 + h * rule.nodes[q], x);
    }
    return sum * h;
}

/// π(τ, a, x) = exp(−∫_τ^a μ(s, x) ds) at spatial node x_index.
inline double survival_probability(const RateField& rates, const SpatialGrid& grid, double tau, double a,
                                   std::size_t x_index) {
    if (tau > a) {
        fail(ErrorKind::domain, "ordering", "survival_probability requires tau <= a");
    }
    if (x_index >= grid.size()) fail(ErrorKind::domain, "index", "x_index out of range");
    return std::exp(-cumulative_hazard(rates, grid.nodes[x_index], tau, a));
}

}  // namespace agespec
