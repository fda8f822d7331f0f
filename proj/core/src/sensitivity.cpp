#include "edflow/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "edflow/errors.hpp"
#include "edflow/policy.hpp"

namespace edflow {

namespace {

// Numerator and denominator fields of the ratios that scale continuously.
struct ScaledRatio {
    const char* name;
    double ModelParams::*numerator;
    double ModelParams::*denominator;
};

constexpr ScaledRatio kScaled[] = {
    {"service_ratio", &ModelParams::mu_u, &ModelParams::mu_n},
    {"revenue_ratio", &ModelParams::r_u_ed, &ModelParams::r_n_ed},
    {"waiting_ratio", &ModelParams::cw_u, &ModelParams::cw_n},
    {"alt_revenue_ratio", &ModelParams::r_alt, &ModelParams::r_n_ed},
    {"balking_ratio", &ModelParams::c_b, &ModelParams::r_n_ed},
};

const ScaledRatio* find_scaled(std::string_view name) {
    for (const auto& r : kScaled)
        if (name == r.name) return &r;
    return nullptr;
}

[[noreturn]] void infeasible(std::string_view name, double value, const std::string& why) {
    std::ostringstream msg;
    msg << name << " = " << value << " is infeasible: " << why;
    throw ParameterError("ratio", msg.str());
}

std::string shifted_label(const char* symbol, double shift) {
    std::ostringstream s;
    s << symbol << (shift >= 0 ? " +" : " ") << std::lround(shift * 100) << "%";
    return s.str();
}

} // namespace

const std::vector<std::string>& enabled_ratio_names() {
    static const std::vector<std::string> names{"bed_ratio",         "service_ratio",
                                                "revenue_ratio",     "waiting_ratio",
                                                "alt_revenue_ratio", "balking_ratio",
                                                "threshold_ratio"};
    return names;
}

const std::vector<std::string>& disabled_ratio_names() {
    static const std::vector<std::string> names{"bed_ratio", "service_ratio", "revenue_ratio",
                                                "waiting_ratio", "balking_ratio"};
    return names;
}

std::optional<double> ratio_value(const ModelParams& p, std::string_view name) {
    if (name == "bed_ratio") return static_cast<double>(p.c_u) / (p.c_u + p.c_n);
    if (name == "threshold_ratio") return static_cast<double>(p.theta) / p.k;
    const ScaledRatio* r = find_scaled(name);
    if (!r) throw ParameterError("ratio", "unknown ratio '" + std::string(name) + "'");
    const double den = p.*(r->denominator);
    if (!(den > 0.0)) return std::nullopt;
    return p.*(r->numerator) / den;
}

std::vector<RatioValue> base_ratios(const ModelParams& params,
                                    std::optional<double> nominal_bed_ratio) {
    std::vector<RatioValue> out;
    for (const std::string& name : enabled_ratio_names()) {
        RatioValue v{name, ratio_value(params, name)};
        if (name == "bed_ratio" && nominal_bed_ratio) v.base = nominal_bed_ratio;
        out.push_back(v);
    }
    return out;
}

AppliedRatio apply_ratio(const ModelParams& params, std::string_view name, double value) {
    if (!std::isfinite(value)) infeasible(name, value, "not finite");
    AppliedRatio out{params, 0.0};
    ModelParams& q = out.params;

    if (name == "bed_ratio") {
        const int c = params.c_u + params.c_n;
        if (c < 2) infeasible(name, value, "a split needs at least two beds");
        const int c_u = round_half_up(value * c);
        if (c_u < 1 || c_u > c - 1) {
            const int nearest = std::clamp(c_u, 1, c - 1);
            std::ostringstream why;
            why << "c_u = " << c_u << " of " << c << " beds; nearest feasible ratio is "
                << static_cast<double>(nearest) / c << " (c_u = " << nearest << ")";
            infeasible(name, value, why.str());
        }
        q.c_u = c_u;
        q.c_n = c - c_u;
    } else if (name == "threshold_ratio") {
        const int theta = round_half_up(value * params.k);
        if (theta < 0 || theta > params.k - 1) {
            const int nearest = std::clamp(theta, 0, params.k - 1);
            std::ostringstream why;
            why << "theta = " << theta << " with k = " << params.k
                << "; nearest feasible ratio is " << static_cast<double>(nearest) / params.k
                << " (theta = " << nearest << ")";
            infeasible(name, value, why.str());
        }
        q.theta = theta;
    } else {
        const ScaledRatio* r = find_scaled(name);
        if (!r) throw ParameterError("ratio", "unknown ratio '" + std::string(name) + "'");
        const bool service = r->numerator == &ModelParams::mu_u;
        const bool strictly_positive = service;
        if (value < 0.0 || (strictly_positive && value == 0.0))
            infeasible(name, value, strictly_positive ? "must be positive" : "must be nonnegative");
        const double den = params.*(r->denominator);
        if (!(den > 0.0)) infeasible(name, value, "denominator is zero");
        const double base = params.*(r->numerator) / den;
        // Scale by value/base so the unperturbed value reproduces the
        // parameters bit for bit.
        if (service)
            q.mu_n = params.mu_n * (base / value);
        else if (base > 0.0)
            q.*(r->numerator) = params.*(r->numerator) * (value / base);
        else
            q.*(r->numerator) = value * den;
    }
    validate(q);
    out.realized = *ratio_value(q, name);
    return out;
}

TornadoReport tornado(const ModelParams& params, const TornadoOptions& options) {
    validate(params);
    TornadoReport report;
    ModelParams q = params;
    if (options.optimize_baseline) {
        const ThetaCurve curve = optimize_theta(q);
        q.theta = curve.theta_star;
        report.Z0 = curve.Z_star;
    } else {
        report.Z0 = evaluate(q).objective.Z;
    }
    report.theta = q.theta;

    const std::vector<std::string>& names =
        options.ratios.empty() ? enabled_ratio_names() : options.ratios;
    std::optional<double> bed_base = options.nominal_bed_ratio;
    const double v = options.variation;

    report.rows = parallel_map<TornadoRow>(names.size(), [&](std::size_t idx) {
        TornadoRow row;
        row.ratio = names[idx];
        try {
            std::optional<double> base = row.ratio == "bed_ratio" && bed_base
                                             ? bed_base
                                             : ratio_value(q, row.ratio);
            if (!base) throw ParameterError("ratio", row.ratio + " has a zero denominator");
            row.base = *base;
            row.low = *base * (1.0 - v);
            row.high = *base * (1.0 + v);
            const AppliedRatio lo = apply_ratio(q, row.ratio, row.low);
            const AppliedRatio hi = apply_ratio(q, row.ratio, row.high);
            row.realized_low = lo.realized;
            row.realized_high = hi.realized;
            row.Z_low = evaluate(lo.params).objective.Z;
            row.Z_high = evaluate(hi.params).objective.Z;
            row.delta_low = row.Z_low - report.Z0;
            row.delta_high = row.Z_high - report.Z0;
            row.impact = std::abs(row.Z_high - row.Z_low);
            row.rel_impact_pct = report.Z0 != 0.0 ? 100.0 * row.impact / std::abs(report.Z0)
                                                  : 0.0;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        return row;
    });

    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [](const TornadoRow& a, const TornadoRow& b) {
                         if (a.error.empty() != b.error.empty()) return a.error.empty();
                         if (a.impact != b.impact) return a.impact > b.impact;
                         return a.ratio < b.ratio;
                     });
    for (std::size_t r = 0; r < report.rows.size(); ++r) report.rows[r].rank = static_cast<int>(r) + 1;
    return report;
}

std::vector<ScenarioCase> standard_cases(double shift, bool policy_cases) {
    struct CaseDef {
        ScenarioParameter parameter;
        const char* what;
        const char* symbol;
    };
    const CaseDef defs[] = {
        {ScenarioParameter::p_u, "Urgent Proportion", "p_u"},
        {ScenarioParameter::lambda, "Arrival Rate", "lambda"},
        {ScenarioParameter::mu_u, "Urgent Service Rate", "mu_u"},
        {ScenarioParameter::capacity, "Capacity", "c"},
        {ScenarioParameter::p_a, "Acceptance Rate", "p_a"},
        {ScenarioParameter::k, "Balking Threshold", "k"},
        {ScenarioParameter::theta, "Theta", "theta"},
    };
    std::vector<ScenarioCase> cases{{"Baseline", "Original parameters", ScenarioParameter::none, 0.0}};
    for (const CaseDef& s : defs) {
        if (!policy_cases &&
            (s.parameter == ScenarioParameter::p_a || s.parameter == ScenarioParameter::theta))
            continue;
        cases.push_back({std::string("Low ") + s.what, shifted_label(s.symbol, -shift), s.parameter, -shift});
        cases.push_back({std::string("High ") + s.what, shifted_label(s.symbol, shift), s.parameter, shift});
    }
    return cases;
}

ModelParams shifted_params(const ModelParams& params, const ScenarioCase& c,
                           std::optional<double> nominal_bed_ratio) {
    ModelParams q = params;
    const double f = 1.0 + c.shift;
    switch (c.parameter) {
    case ScenarioParameter::none:
        break;
    case ScenarioParameter::p_u:
        q.p_u *= f;
        break;
    case ScenarioParameter::lambda:
        q.lambda *= f;
        break;
    case ScenarioParameter::mu_u:
        q.mu_u *= f;
        break;
    case ScenarioParameter::capacity: {
        const int c_total = round_half_up((params.c_u + params.c_n) * f);
        const double ratio = nominal_bed_ratio.value_or(static_cast<double>(params.c_u) /
                                                        (params.c_u + params.c_n));
        q.c_u = round_half_up(ratio * c_total);
        q.c_n = c_total - q.c_u;
        break;
    }
    case ScenarioParameter::p_a:
        q.p_a *= f;
        break;
    case ScenarioParameter::k:
        q.k = round_half_up(params.k * f);
        q.theta = std::min(q.theta, q.k - 1);
        break;
    case ScenarioParameter::theta:
        q.theta = round_half_up(params.theta * f);
        break;
    }
    return q;
}

std::vector<ScenarioRow> scenario_grid(const ModelParams& params,
                                       const std::vector<ScenarioCase>& cases,
                                       const ScenarioOptions& options) {
    validate(params);
    return parallel_map<ScenarioRow>(cases.size(), [&](std::size_t idx) {
        const ScenarioCase& sc = cases[idx];
        ScenarioRow row;
        row.name = sc.name;
        row.description = sc.description;
        row.status = "ok";
        ModelParams q = shifted_params(params, sc, options.nominal_bed_ratio);
        try {
            validate(q);
        } catch (const ParameterError& e) {
            row.status = "infeasible";
            row.note = e.what();
            return row;
        }
        StabilityVerdict verdict = check_stability(q, CapacityMode::nested);
        if (!verdict.stable && sc.parameter == ScenarioParameter::lambda && sc.shift > 0) {
            std::ostringstream note;
            note << "lambda " << q.lambda << " gives " << verdict.reason
                 << "; held at baseline lambda " << params.lambda;
            q.lambda = params.lambda;
            row.status = "capped";
            row.note = note.str();
            verdict = check_stability(q, CapacityMode::nested);
        }
        if (!verdict.stable) {
            row.status = "unstable";
            row.note = verdict.reason;
            return row;
        }
        try {
            TornadoOptions on;
            on.variation = options.variation;
            on.nominal_bed_ratio = options.nominal_bed_ratio;
            const TornadoReport en = tornado(q, on);
            row.baseline_obj = en.Z0;
            row.enabled_Z = en.Z0;
            row.theta_star = en.theta;
            row.theta_over_k = static_cast<double>(en.theta) / q.k;
            if (!en.rows.empty() && en.rows.front().error.empty()) {
                row.top_ratio = en.rows.front().ratio;
                row.rel_impact_pct = en.rows.front().rel_impact_pct;
            }
            if (options.include_disabled) {
                TornadoOptions off;
                off.variation = options.variation;
                off.nominal_bed_ratio = options.nominal_bed_ratio;
                off.ratios = disabled_ratio_names();
                off.optimize_baseline = false;
                const TornadoReport dis = tornado(disabled_variant(q), off);
                row.disabled_Z = dis.Z0;
                if (!dis.rows.empty() && dis.rows.front().error.empty()) {
                    row.disabled_top_ratio = dis.rows.front().ratio;
                    row.disabled_rel_impact_pct = dis.rows.front().rel_impact_pct;
                }
                row.benefit = en.Z0 - dis.Z0;
                if (dis.Z0 != 0.0) row.gain_pct = 100.0 * *row.benefit / std::abs(dis.Z0);
            }
        } catch (const std::exception& e) {
            row.status = "failed";
            row.note = e.what();
        }
        return row;
    });
}

std::vector<SweepRow> proportional_sweep(const ModelParams& params, std::string_view ratio,
                                         double lo, double hi, int steps) {
    validate(params);
    if (steps < 1) throw ParameterError("steps", "must be at least 1");
    ratio_value(params, ratio); // rejects unknown names up front
    const bool forced = ratio == "threshold_ratio";
    return parallel_map<SweepRow>(static_cast<std::size_t>(steps), [&](std::size_t i) {
        SweepRow row;
        row.ratio_value = steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (steps - 1);
        try {
            const AppliedRatio a = apply_ratio(params, ratio, row.ratio_value);
            row.realized = a.realized;
            if (forced) {
                row.theta_star = a.params.theta;
                row.Z = evaluate(a.params).objective.Z;
            } else {
                const ThetaCurve curve = optimize_theta(a.params);
                row.theta_star = curve.theta_star;
                row.Z = curve.Z_star;
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        return row;
    });
}

} // namespace edflow
