#pragma once

#include <string>
#include <string_view>

namespace edflow {

enum class WaitingCostBasis { headcount, per_patient_delay };

enum class CapacityMode { nested, fixed };

std::string_view to_string(WaitingCostBasis basis);
std::string_view to_string(CapacityMode mode);
WaitingCostBasis parse_waiting_cost_basis(std::string_view text);
CapacityMode parse_capacity_mode(std::string_view text);

// Every exogenous input of one ED scenario. Field names double as the JSON
// config keys.
struct ModelParams {
    double lambda = 1.0; // total arrival rate, patients/hour
    double p_u = 0.5;    // urgent fraction
    double mu_u = 1.0;   // per-bed urgent service rate
    double mu_n = 1.0;   // per-bed non-urgent service rate
    int c_u = 1;         // urgent beds
    int c_n = 1;         // non-urgent beds
    int k = 1;           // balking threshold on total occupancy
    int theta = 0;       // redirection threshold, 0 <= theta <= k-1
    double p_a = 0.0;    // alternative-care acceptance probability

    double r_u_ed = 0.0; // revenue per completed urgent ED patient
    double r_n_ed = 0.0; // revenue per completed non-urgent ED patient
    double r_alt = 0.0;  // revenue per accepted alternative-care referral
    double c_b = 0.0;    // cost per balking patient
    double cw_u = 0.0;   // urgent holding cost, per patient-hour
    double cw_n = 0.0;   // non-urgent holding cost, per patient-hour

    double w_rev = 1.0;
    double w_balk = 1.0;
    double w_wait = 1.0;

    WaitingCostBasis waiting_cost_basis = WaitingCostBasis::headcount;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct DerivedParams {
    double lambda_u = 0.0;
    double lambda_n = 0.0;
    int c_total = 0;
    double rho_u = 0.0; // lambda_u / (c_total * mu_u)
    int h = 0;          // first level of the homogeneous part, max(k, c_total)
    // Non-urgent headcount runs over 0..k: an admission at N = k-1 lands on
    // N = k, so each level carries k+1 phases.
    int phases = 0;
};

// Throws ParameterError naming the first field that violates an invariant.
void validate(const ModelParams& params);

DerivedParams derive(const ModelParams& params);

struct StabilityVerdict {
    CapacityMode mode = CapacityMode::nested;
    bool stable = false;
    double intensity = 0.0;
    std::string reason;
};

// nested: lambda_u / (c_total mu_u) < 1. fixed: lambda_u / (c_u mu_u) < 1 and
// c_u >= 1.
StabilityVerdict check_stability(const ModelParams& params, CapacityMode mode);

// Throws StabilityError when the verdict is unstable.
void require_stable(const ModelParams& params, CapacityMode mode);

// Probability that a non-urgent arrival seeing i urgent and j non-urgent
// patients joins the ED queue.
inline double alpha(int i, int j, const ModelParams& params) {
    const int occupancy = i + j;
    if (occupancy < params.theta) return 1.0;
    if (occupancy < params.k) return 1.0 - params.p_a;
    return 0.0;
}

inline int servers_urgent(int i, const ModelParams& params) {
    const int c = params.c_u + params.c_n;
    return i < c ? i : c;
}

// Non-urgent service is capped by the dedicated beds and by the beds urgent
// patients leave free.
inline int servers_nonurgent(int i, int j, const ModelParams& params) {
    const int c = params.c_u + params.c_n;
    int free_beds = c - i;
    if (free_beds < 0) free_beds = 0;
    int s = j < free_beds ? j : free_beds;
    return s < params.c_n ? s : params.c_n;
}

// Alternative care switched off: offers are never accepted and a balk costs
// the lost ED revenue.
ModelParams disabled_variant(const ModelParams& params);

// Round half up; every integer realization of a continuous ratio goes
// through here.
int round_half_up(double value);

} // namespace edflow
