#pragma once

#include <optional>

#include "edflow/model.hpp"
#include "edflow/qbd.hpp"

namespace edflow {

struct PerformanceMetrics {
    double E_Nn = 0.0;
    double E_Nu = 0.0;
    double E_Nn_s = 0.0;
    double E_Nu_s = 0.0;
    double lambda_n_eff = 0.0;
    // Little's law; empty when nobody of that class is admitted.
    std::optional<double> E_Wn;
    std::optional<double> E_Wu;
    double p_balk = 0.0;      // P(N >= k)
    double p_band = 0.0;      // P(theta <= N < k)
    double p_below = 0.0;     // P(N < theta)
};

struct ObjectiveBreakdown {
    double R_u = 0.0;
    double R_n_ed = 0.0;
    double R_alt_rev = 0.0;
    double B_cost = 0.0;
    double W_n_cost = 0.0;
    double W_u_cost = 0.0;
    double Z = 0.0;
};

PerformanceMetrics compute_metrics(const StationaryDistribution& dist, const ModelParams& params);

// Waiting cost is cw * E[N] under the headcount basis and cw * E[W] under
// per_patient_delay (an undefined E[W] contributes nothing).
ObjectiveBreakdown compute_objective(const PerformanceMetrics& metrics, const ModelParams& params);

// Fills lambda_n_eff-derived fields shared by the nested and fixed models.
void finish_metrics(PerformanceMetrics& m, const ModelParams& params);

} // namespace edflow
