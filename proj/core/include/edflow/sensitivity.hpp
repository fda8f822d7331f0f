#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edflow/model.hpp"

namespace edflow {

// Operational ratios. Each moves its numerator and holds the denominator,
// except service_ratio, which moves mu_n so the urgent load stays put.
//   bed_ratio          c_u / c          (c_u = round(r c), c_n = c - c_u)
//   service_ratio      mu_u / mu_n      (mu_n = mu_u / r)
//   revenue_ratio      r_u_ed / r_n_ed
//   waiting_ratio      cw_u / cw_n
//   alt_revenue_ratio  r_alt / r_n_ed
//   balking_ratio      c_b / r_n_ed
//   threshold_ratio    theta / k        (theta = round(r k))
const std::vector<std::string>& enabled_ratio_names();
// The five ratios that matter once alternative care is switched off.
const std::vector<std::string>& disabled_ratio_names();

struct RatioValue {
    std::string name;
    std::optional<double> base; // empty when the denominator is zero
};

// bed_ratio reports nominal_bed_ratio when given, otherwise c_u / c.
std::vector<RatioValue> base_ratios(const ModelParams& params,
                                    std::optional<double> nominal_bed_ratio = std::nullopt);

std::optional<double> ratio_value(const ModelParams& params, std::string_view name);

struct AppliedRatio {
    ModelParams params;
    double realized = 0.0; // ratio actually achieved after integer rounding
};

// Throws ParameterError("ratio", ...) for unknown names and for values whose
// rounding leaves the feasible set; the message names the nearest feasible
// value.
AppliedRatio apply_ratio(const ModelParams& params, std::string_view name, double value);

struct TornadoOptions {
    double variation = 0.05;
    std::vector<std::string> ratios; // empty: enabled_ratio_names()
    std::optional<double> nominal_bed_ratio;
    // Re-optimize theta before perturbing; otherwise params.theta is the
    // operating point.
    bool optimize_baseline = true;
};

struct TornadoRow {
    std::string ratio;
    double base = 0.0;
    double low = 0.0;
    double high = 0.0;
    double realized_low = 0.0;
    double realized_high = 0.0;
    double Z_low = 0.0;
    double Z_high = 0.0;
    double delta_low = 0.0;  // Z_low - Z_0
    double delta_high = 0.0; // Z_high - Z_0
    double impact = 0.0;     // |Z_high - Z_low|
    double rel_impact_pct = 0.0;
    int rank = 0;            // 1-based; failed rows rank after all others
    std::string error;       // empty on success
};

struct TornadoReport {
    int theta = 0; // operating point
    double Z0 = 0.0;
    std::vector<TornadoRow> rows; // ranked
};

TornadoReport tornado(const ModelParams& params, const TornadoOptions& options = {});

enum class ScenarioParameter { none, p_u, lambda, mu_u, capacity, p_a, k, theta };

struct ScenarioCase {
    std::string name;
    std::string description;
    ScenarioParameter parameter = ScenarioParameter::none;
    double shift = 0.0; // relative, e.g. -0.2
};

// Baseline plus low/high shifts of p_u, lambda, mu_u, c, p_a, k and theta.
// Without policy cases the p_a and theta shifts are left out.
std::vector<ScenarioCase> standard_cases(double shift = 0.2, bool policy_cases = true);

struct ScenarioOptions {
    double variation = 0.05;
    std::optional<double> nominal_bed_ratio;
    bool include_disabled = true;
};

struct ScenarioRow {
    std::string name;
    std::string description;
    // ok, capped (arrival rate held at baseline for stability), infeasible or
    // unstable.
    std::string status;
    std::string note;
    std::optional<double> baseline_obj; // enabled Z at theta*
    std::optional<int> theta_star;
    std::optional<double> theta_over_k;
    std::string top_ratio;
    std::optional<double> rel_impact_pct;
    std::optional<double> enabled_Z;
    std::optional<double> disabled_Z;
    std::string disabled_top_ratio;
    std::optional<double> disabled_rel_impact_pct;
    std::optional<double> benefit;
    std::optional<double> gain_pct;
};

// Scenario parameters for one case, before stability handling.
ModelParams shifted_params(const ModelParams& params, const ScenarioCase& c,
                           std::optional<double> nominal_bed_ratio);

std::vector<ScenarioRow> scenario_grid(const ModelParams& params,
                                       const std::vector<ScenarioCase>& cases,
                                       const ScenarioOptions& options = {});

struct SweepRow {
    double ratio_value = 0.0;
    double realized = 0.0;
    std::optional<int> theta_star;
    std::optional<double> Z;
    std::string error;
};

// Evenly spaced values lo..hi (steps >= 1; one step gives lo). theta is
// re-optimized per point except for threshold_ratio, which sets it.
std::vector<SweepRow> proportional_sweep(const ModelParams& params, std::string_view ratio,
                                         double lo, double hi, int steps);

} // namespace edflow
