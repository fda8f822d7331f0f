#include "edflow/policy.hpp"

#include <cstdlib>
#include <string>

#include "edflow/errors.hpp"
#include "edflow/fixed_partition.hpp"
#include "edflow/qbd.hpp"

namespace edflow {

unsigned worker_count() {
    if (const char* env = std::getenv("EDFLOW_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

Evaluation evaluate(const ModelParams& params, CapacityMode mode) {
    Evaluation e;
    if (mode == CapacityMode::nested) {
        const StationaryDistribution dist = solve(params);
        e.metrics = compute_metrics(dist, params);
        e.objective = compute_objective(e.metrics, params);
    } else {
        FixedSolution s = solve_fixed(params);
        e.metrics = s.metrics;
        e.objective = s.objective;
    }
    return e;
}

ThetaCurve optimize_theta(const ModelParams& params, CapacityMode mode) {
    validate(params);
    require_stable(params, mode);
    ThetaCurve curve;
    curve.mode = mode;
    curve.rows = parallel_map<ThetaPoint>(static_cast<std::size_t>(params.k), [&](std::size_t t) {
        ModelParams q = params;
        q.theta = static_cast<int>(t);
        try {
            Evaluation e = evaluate(q, mode);
            return ThetaPoint{q.theta, e.metrics, e.objective};
        } catch (const NumericalError& err) {
            throw NumericalError("theta=" + std::to_string(q.theta) + ": " + err.what());
        }
    });
    curve.theta_star = 0;
    curve.Z_star = curve.rows.front().objective.Z;
    for (const ThetaPoint& row : curve.rows)
        if (row.objective.Z > curve.Z_star) {
            curve.Z_star = row.objective.Z;
            curve.theta_star = row.theta;
        }
    return curve;
}

CapacityScan optimize_capacity(const ModelParams& params, int c_total, CapacityMode mode) {
    if (c_total < 2) throw ParameterError("c_total", "capacity scan needs at least two beds");
    CapacityScan scan;
    scan.mode = mode;
    scan.c_total = c_total;
    scan.rows = parallel_map<CapacityRow>(static_cast<std::size_t>(c_total - 1), [&](std::size_t idx) {
        ModelParams q = params;
        q.c_u = static_cast<int>(idx) + 1;
        q.c_n = c_total - q.c_u;
        const StabilityVerdict v = check_stability(q, mode);
        CapacityRow row;
        row.c_u = q.c_u;
        row.c_n = q.c_n;
        row.stable = v.stable;
        row.intensity = v.intensity;
        if (v.stable) {
            const ThetaCurve curve = optimize_theta(q, mode);
            row.theta_star = curve.theta_star;
            row.Z_star = curve.Z_star;
        }
        return row;
    });
    for (std::size_t r = 0; r < scan.rows.size(); ++r) {
        const auto& z = scan.rows[r].Z_star;
        if (z && (!scan.best || *z > *scan.rows[*scan.best].Z_star)) scan.best = r;
    }
    return scan;
}

} // namespace edflow
