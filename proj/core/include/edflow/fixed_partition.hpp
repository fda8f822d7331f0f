#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edflow/metrics.hpp"
#include "edflow/model.hpp"

namespace edflow {

// Stationary law of an M/M/c queue with offered load a = lambda/mu.
struct ErlangMarginal {
    double offered_load = 0.0;
    int servers = 0;
    double rho = 0.0;        // a / c
    double erlang_b = 0.0;   // blocking probability of M/M/c/c
    double erlang_c = 0.0;   // P(wait) = P(N >= c)
    double mean_queue = 0.0; // L_q
    double mean_in_system = 0.0;
    double mean_busy = 0.0;
    std::vector<double> head; // pi(0..c); pi(i) = pi(c) rho^(i-c) above

    double probability(int i) const;
    double cdf(int i) const;       // P(N <= i); 0 for i < 0
    double tail_from(int i) const; // P(N >= i)
};

// Throws ParameterError for c < 1 or a < 0 and StabilityError for a >= c.
ErlangMarginal erlang_mmc(double offered_load, int servers);

// Non-urgent headcount chain of the fixed model, j = 0..k.
struct BirthDeathDistribution {
    std::vector<double> pi;
    std::vector<double> birth; // lambda_j; birth[k] = 0
    std::vector<double> death; // mu_j; death[0] = 0
};

BirthDeathDistribution solve_birth_death(std::vector<double> birth, std::vector<double> death);

struct FixedSolution {
    ErlangMarginal urgent;
    BirthDeathDistribution nonurgent;
    PerformanceMetrics metrics;
    ObjectiveBreakdown objective;
};

// Urgent patients use only c_u beds (M/M/c_u); non-urgent patients use only
// c_n beds and see the urgent count through the admission rule, with the two
// counts treated as independent. Requires c_u >= 1, c_n >= 1 and
// lambda_u < c_u mu_u.
FixedSolution solve_fixed(const ModelParams& params);

struct ComparisonRow {
    int theta = 0;
    double nested_Z = 0.0;
    std::optional<double> fixed_Z; // empty when the fixed split is unstable
    double difference = 0.0;       // nested - fixed (0 when fixed is unstable)
    std::string winner;            // nested, fixed or tie
};

std::vector<ComparisonRow> compare_nested_fixed(const ModelParams& params,
                                                const std::vector<int>& theta_grid);

struct BedCombinationRow {
    int c_u = 0;
    int c_n = 0;
    int nested_theta_star = 0;
    double nested_Z = 0.0;
    bool fixed_stable = false;
    double fixed_intensity = 0.0;
    std::optional<int> fixed_theta_star;
    std::optional<double> fixed_Z;
};

// c_u = 1 .. c_total-1 with c_n = c_total - c_u; theta re-optimized per split
// and per mode.
std::vector<BedCombinationRow> bed_combination_scan(const ModelParams& params, int c_total);

} // namespace edflow
