#include "edflow/fixed_partition.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "edflow/errors.hpp"
#include "edflow/policy.hpp"

namespace edflow {

double ErlangMarginal::probability(int i) const {
    if (i < 0) return 0.0;
    if (i <= servers) return head[static_cast<std::size_t>(i)];
    if (rho == 0.0) return 0.0;
    return head.back() * std::pow(rho, i - servers);
}

double ErlangMarginal::tail_from(int i) const {
    if (i <= 0) return 1.0;
    if (i > servers) return rho == 0.0 ? 0.0 : probability(i) / (1.0 - rho);
    double s = head.back() / (1.0 - rho);
    for (int n = i; n < servers; ++n) s += head[static_cast<std::size_t>(n)];
    return s;
}

double ErlangMarginal::cdf(int i) const {
    if (i < 0) return 0.0;
    if (i < servers) {
        double s = 0.0;
        for (int n = 0; n <= i; ++n) s += head[static_cast<std::size_t>(n)];
        return s;
    }
    return 1.0 - tail_from(i + 1);
}

ErlangMarginal erlang_mmc(double a, int c) {
    if (c < 1) throw ParameterError("c_u", "an M/M/c queue needs at least one server");
    if (!(a >= 0.0) || !std::isfinite(a)) throw ParameterError("lambda", "offered load must be finite and nonnegative");
    if (a >= c) {
        std::ostringstream msg;
        msg << "M/M/" << c << " with offered load " << a << " is unstable (intensity " << a / c << ")";
        throw StabilityError(a / c, msg.str());
    }
    ErlangMarginal e;
    e.offered_load = a;
    e.servers = c;
    e.rho = a / c;

    double b = 1.0;
    for (int n = 1; n <= c; ++n) b = a * b / (n + a * b);
    e.erlang_b = b;
    e.erlang_c = b / (1.0 - e.rho * (1.0 - b));
    e.mean_queue = e.erlang_c * e.rho / (1.0 - e.rho);
    e.mean_busy = a;
    e.mean_in_system = e.mean_queue + a;

    // Unnormalized a^i / i!, rescaled whenever it threatens to overflow.
    e.head.assign(static_cast<std::size_t>(c) + 1, 0.0);
    e.head[0] = 1.0;
    for (int i = 1; i <= c; ++i) {
        e.head[static_cast<std::size_t>(i)] = e.head[static_cast<std::size_t>(i) - 1] * a / i;
        if (e.head[static_cast<std::size_t>(i)] > 1e250)
            for (int n = 0; n <= i; ++n) e.head[static_cast<std::size_t>(n)] *= 1e-250;
    }
    double total = e.head.back() / (1.0 - e.rho);
    for (int i = 0; i < c; ++i) total += e.head[static_cast<std::size_t>(i)];
    for (double& v : e.head) v /= total;
    return e;
}

BirthDeathDistribution solve_birth_death(std::vector<double> birth, std::vector<double> death) {
    const std::size_t n = birth.size();
    if (n == 0 || death.size() != n) throw std::invalid_argument("birth/death rate vectors mismatch");
    BirthDeathDistribution d;
    d.pi.assign(n, 0.0);
    d.pi[0] = 1.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        if (birth[j] == 0.0) break;
        if (!(death[j + 1] > 0.0))
            throw NumericalError("birth-death chain has a state with births but no deaths above it");
        d.pi[j + 1] = d.pi[j] * birth[j] / death[j + 1];
        if (d.pi[j + 1] > 1e250)
            for (std::size_t m = 0; m <= j + 1; ++m) d.pi[m] *= 1e-250;
    }
    double total = 0.0;
    for (double v : d.pi) total += v;
    for (double& v : d.pi) v /= total;
    d.birth = std::move(birth);
    d.death = std::move(death);
    return d;
}

FixedSolution solve_fixed(const ModelParams& p) {
    const DerivedParams d = derive(p);
    if (p.c_n < 1) throw ParameterError("c_n", "the fixed partition needs at least one non-urgent bed");
    require_stable(p, CapacityMode::fixed);

    FixedSolution s;
    s.urgent = erlang_mmc(d.lambda_u / p.mu_u, p.c_u);
    const ErlangMarginal& u = s.urgent;

    // An arrival seeing j non-urgent patients is admitted outright when the
    // urgent count is below theta - j and after a declined offer when it is
    // in [theta - j, k - j).
    const int k = p.k;
    std::vector<double> birth(static_cast<std::size_t>(k) + 1, 0.0);
    std::vector<double> death(static_cast<std::size_t>(k) + 1, 0.0);
    std::vector<double> below(static_cast<std::size_t>(k) + 1), band(static_cast<std::size_t>(k) + 1);
    for (int j = 0; j <= k; ++j) {
        const double f_theta = u.cdf(p.theta - j - 1);
        const double f_k = u.cdf(k - j - 1);
        below[static_cast<std::size_t>(j)] = f_theta;
        band[static_cast<std::size_t>(j)] = std::max(0.0, f_k - f_theta);
        birth[static_cast<std::size_t>(j)] =
            d.lambda_n * (f_theta + (1.0 - p.p_a) * band[static_cast<std::size_t>(j)]);
        death[static_cast<std::size_t>(j)] = p.mu_n * std::min(j, p.c_n);
    }
    s.nonurgent = solve_birth_death(birth, death);

    PerformanceMetrics& m = s.metrics;
    m.E_Nu = u.mean_in_system;
    m.E_Nu_s = u.mean_busy;
    for (int j = 0; j <= k; ++j) {
        const std::size_t jj = static_cast<std::size_t>(j);
        const double q = s.nonurgent.pi[jj];
        m.E_Nn += j * q;
        m.E_Nn_s += std::min(j, p.c_n) * q;
        m.p_below += q * below[jj];
        m.p_band += q * band[jj];
        m.p_balk += q * u.tail_from(k - j);
        m.lambda_n_eff += q * birth[jj];
    }
    finish_metrics(m, p);
    s.objective = compute_objective(m, p);
    return s;
}

std::vector<ComparisonRow> compare_nested_fixed(const ModelParams& params,
                                                const std::vector<int>& theta_grid) {
    validate(params);
    for (int t : theta_grid)
        if (t < 0 || t > params.k - 1)
            throw ParameterError("theta", "grid value " + std::to_string(t) + " outside [0, k-1]");
    const bool fixed_ok = check_stability(params, CapacityMode::fixed).stable && params.c_n >= 1;
    return parallel_map<ComparisonRow>(theta_grid.size(), [&](std::size_t idx) {
        ModelParams q = params;
        q.theta = theta_grid[idx];
        ComparisonRow row;
        row.theta = q.theta;
        row.nested_Z = evaluate(q, CapacityMode::nested).objective.Z;
        if (fixed_ok) row.fixed_Z = solve_fixed(q).objective.Z;
        if (!row.fixed_Z) {
            row.winner = "nested";
            return row;
        }
        row.difference = row.nested_Z - *row.fixed_Z;
        const double scale = std::max({1.0, std::abs(row.nested_Z), std::abs(*row.fixed_Z)});
        if (std::abs(row.difference) <= 1e-9 * scale)
            row.winner = "tie";
        else
            row.winner = row.difference > 0 ? "nested" : "fixed";
        return row;
    });
}

std::vector<BedCombinationRow> bed_combination_scan(const ModelParams& params, int c_total) {
    const CapacityScan nested = optimize_capacity(params, c_total, CapacityMode::nested);
    const CapacityScan fixed = optimize_capacity(params, c_total, CapacityMode::fixed);
    std::vector<BedCombinationRow> out;
    for (std::size_t r = 0; r < nested.rows.size(); ++r) {
        const CapacityRow& a = nested.rows[r];
        const CapacityRow& b = fixed.rows[r];
        BedCombinationRow row;
        row.c_u = a.c_u;
        row.c_n = a.c_n;
        row.nested_theta_star = a.theta_star.value_or(0);
        row.nested_Z = a.Z_star.value_or(0.0);
        row.fixed_stable = b.stable;
        row.fixed_intensity = b.intensity;
        row.fixed_theta_star = b.theta_star;
        row.fixed_Z = b.Z_star;
        out.push_back(row);
    }
    return out;
}

} // namespace edflow
