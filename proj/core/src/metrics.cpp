#include "edflow/metrics.hpp"

namespace edflow {

PerformanceMetrics compute_metrics(const StationaryDistribution& dist, const ModelParams& p) {
    const DerivedParams d = derive(p);
    const int h = dist.h();
    const int n = dist.phases();
    const auto& x = dist.x_rows();
    PerformanceMetrics m;

    // Levels below h carry all of the state dependence; at and above h
    // (h >= max(k, c)) every state balks, no non-urgent is in service and
    // all c beds serve urgents.
    for (int i = 0; i < h; ++i) {
        const auto& row = x[static_cast<std::size_t>(i)];
        const double mass = row.sum();
        m.E_Nu += i * mass;
        m.E_Nu_s += servers_urgent(i, p) * mass;
        for (int j = 0; j < n; ++j) {
            const double q = row(j);
            const int occupancy = i + j;
            m.E_Nn += j * q;
            m.E_Nn_s += servers_nonurgent(i, j, p) * q;
            if (occupancy < p.theta)
                m.p_below += q;
            else if (occupancy < p.k)
                m.p_band += q;
            else
                m.p_balk += q;
        }
    }
    const TailSums tail = tail_sums(dist);
    const double tail_mass = tail.mass.sum();
    for (int j = 0; j < n; ++j) m.E_Nn += j * tail.mass(j);
    m.E_Nu += tail.index_mass.sum();
    m.E_Nu_s += d.c_total * tail_mass;
    m.p_balk += tail_mass;

    m.lambda_n_eff = d.lambda_n * (m.p_below + (1.0 - p.p_a) * m.p_band);
    finish_metrics(m, p);
    return m;
}

void finish_metrics(PerformanceMetrics& m, const ModelParams& p) {
    const double lambda_u = p.lambda * p.p_u;
    m.E_Wn = m.lambda_n_eff > 0.0 ? std::optional<double>(m.E_Nn / m.lambda_n_eff) : std::nullopt;
    m.E_Wu = lambda_u > 0.0 ? std::optional<double>(m.E_Nu / lambda_u) : std::nullopt;
}

ObjectiveBreakdown compute_objective(const PerformanceMetrics& m, const ModelParams& p) {
    const double lambda_n = p.lambda * (1.0 - p.p_u);
    ObjectiveBreakdown o;
    o.R_u = p.r_u_ed * p.mu_u * m.E_Nu_s;
    o.R_n_ed = p.r_n_ed * p.mu_n * m.E_Nn_s;
    o.R_alt_rev = p.r_alt * lambda_n * p.p_a * m.p_band;
    o.B_cost = p.c_b * lambda_n * m.p_balk;
    if (p.waiting_cost_basis == WaitingCostBasis::headcount) {
        o.W_n_cost = p.cw_n * m.E_Nn;
        o.W_u_cost = p.cw_u * m.E_Nu;
    } else {
        o.W_n_cost = p.cw_n * m.E_Wn.value_or(0.0);
        o.W_u_cost = p.cw_u * m.E_Wu.value_or(0.0);
    }
    o.Z = p.w_rev * (o.R_u + o.R_n_ed + o.R_alt_rev) - p.w_balk * o.B_cost -
          p.w_wait * (o.W_n_cost + o.W_u_cost);
    return o;
}

} // namespace edflow
