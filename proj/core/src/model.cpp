#include "edflow/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "edflow/errors.hpp"

namespace edflow {

std::string_view to_string(WaitingCostBasis basis) {
    return basis == WaitingCostBasis::headcount ? "headcount" : "per_patient_delay";
}

std::string_view to_string(CapacityMode mode) {
    return mode == CapacityMode::nested ? "nested" : "fixed";
}

WaitingCostBasis parse_waiting_cost_basis(std::string_view text) {
    if (text == "headcount") return WaitingCostBasis::headcount;
    if (text == "per_patient_delay") return WaitingCostBasis::per_patient_delay;
    throw ParameterError("waiting_cost_basis",
                         "expected headcount or per_patient_delay, got '" + std::string(text) + "'");
}

CapacityMode parse_capacity_mode(std::string_view text) {
    if (text == "nested") return CapacityMode::nested;
    if (text == "fixed") return CapacityMode::fixed;
    throw ParameterError("mode", "expected nested or fixed, got '" + std::string(text) + "'");
}

namespace {

void require(bool ok, const char* field, const std::string& what) {
    if (!ok) throw ParameterError(field, what);
}

void require_money(double value, const char* field) {
    require(std::isfinite(value) && value >= 0.0, field, "must be finite and nonnegative");
}

} // namespace

void validate(const ModelParams& p) {
    require(std::isfinite(p.lambda) && p.lambda > 0.0, "lambda", "must be positive");
    require(p.p_u >= 0.0 && p.p_u <= 1.0, "p_u", "must lie in [0, 1]");
    require(std::isfinite(p.mu_u) && p.mu_u > 0.0, "mu_u", "must be positive");
    require(std::isfinite(p.mu_n) && p.mu_n > 0.0, "mu_n", "must be positive");
    require(p.c_u >= 0, "c_u", "must be nonnegative");
    require(p.c_n >= 0, "c_n", "must be nonnegative");
    require(p.c_u + p.c_n >= 1, "c_u", "c_u + c_n must be at least 1");
    require(p.k >= 1, "k", "must be at least 1");
    require(p.theta >= 0 && p.theta <= p.k - 1, "theta",
            "must lie in [0, k-1] (k = " + std::to_string(p.k) + ")");
    require(p.p_a >= 0.0 && p.p_a <= 1.0, "p_a", "must lie in [0, 1]");
    require_money(p.r_u_ed, "r_u_ed");
    require_money(p.r_n_ed, "r_n_ed");
    require_money(p.r_alt, "r_alt");
    require_money(p.c_b, "c_b");
    require_money(p.cw_u, "cw_u");
    require_money(p.cw_n, "cw_n");
    require(std::isfinite(p.w_rev), "w_rev", "must be finite");
    require(std::isfinite(p.w_balk), "w_balk", "must be finite");
    require(std::isfinite(p.w_wait), "w_wait", "must be finite");
}

DerivedParams derive(const ModelParams& p) {
    validate(p);
    DerivedParams d;
    d.lambda_u = p.lambda * p.p_u;
    d.lambda_n = p.lambda * (1.0 - p.p_u);
    d.c_total = p.c_u + p.c_n;
    d.rho_u = d.lambda_u / (d.c_total * p.mu_u);
    d.h = std::max(p.k, d.c_total);
    d.phases = p.k + 1;
    return d;
}

StabilityVerdict check_stability(const ModelParams& p, CapacityMode mode) {
    const DerivedParams d = derive(p);
    StabilityVerdict v;
    v.mode = mode;
    std::ostringstream why;
    if (mode == CapacityMode::nested) {
        v.intensity = d.rho_u;
        v.stable = d.rho_u < 1.0;
        why << "nested urgent intensity lambda_u/(c*mu_u) = " << v.intensity;
    } else {
        if (p.c_u < 1) {
            v.intensity = std::numeric_limits<double>::infinity();
            v.stable = false;
            why << "fixed partition needs c_u >= 1";
        } else {
            v.intensity = d.lambda_u / (p.c_u * p.mu_u);
            v.stable = v.intensity < 1.0;
            why << "fixed urgent intensity lambda_u/(c_u*mu_u) = " << v.intensity;
        }
    }
    why << (v.stable ? " (stable)" : " (unstable)");
    v.reason = why.str();
    return v;
}

void require_stable(const ModelParams& params, CapacityMode mode) {
    const StabilityVerdict v = check_stability(params, mode);
    if (!v.stable) throw StabilityError(v.intensity, v.reason);
}

ModelParams disabled_variant(const ModelParams& params) {
    ModelParams out = params;
    out.p_a = 0.0;
    out.c_b = params.r_n_ed;
    return out;
}

int round_half_up(double value) {
    return static_cast<int>(std::floor(value + 0.5));
}

} // namespace edflow
