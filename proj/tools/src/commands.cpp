#include <chrono>
#include <cmath>
#include <ostream>

#include "edflow/errors.hpp"
#include "edflow/fixed_partition.hpp"
#include "edflow/io.hpp"
#include "edflow/metrics.hpp"
#include "edflow/policy.hpp"
#include "edflow/qbd.hpp"
#include "edflow/sensitivity.hpp"
#include "edflow/simulation.hpp"
#include "edflow/study.hpp"

namespace edflow::study {

namespace {

namespace fs = std::filesystem;

// Rows of JSON scalars rendered either as CSV or as a JSON array of objects.
// Null cells become empty CSV fields.
class Table {
public:
    explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add(std::vector<Json> row) {
        if (row.size() != columns_.size()) throw std::logic_error("table row width mismatch");
        rows_.push_back(std::move(row));
    }

    std::string csv() const {
        std::string out;
        for (std::size_t c = 0; c < columns_.size(); ++c) out += (c ? "," : "") + columns_[c];
        out += '\n';
        for (const auto& row : rows_) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) out += ',';
                out += cell(row[c]);
            }
            out += '\n';
        }
        return out;
    }

    Json json() const {
        Json arr = Json::array();
        for (const auto& row : rows_) {
            Json obj = Json::object();
            for (std::size_t c = 0; c < row.size(); ++c) {
                const Json& v = row[c];
                obj[columns_[c]] = v.is_number_float() && !std::isfinite(v.get<double>()) ? Json() : v;
            }
            arr.push_back(obj);
        }
        return arr;
    }

private:
    static std::string cell(const Json& v) {
        if (v.is_null()) return "";
        if (v.is_number_float()) return format_double(v.get<double>());
        if (v.is_number()) return v.dump();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        const std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char ch : s) {
            if (ch == '"') q += '"';
            q += ch;
        }
        return q + '"';
    }

    std::vector<std::string> columns_;
    std::vector<std::vector<Json>> rows_;
};

template <class T>
Json opt(const std::optional<T>& v) {
    return v ? Json(*v) : Json();
}

Json text_or_null(const std::string& s) { return s.empty() ? Json() : Json(s); }

class Writer {
public:
    Writer(const StudyConfig& sc, RunOutcome& outcome) : sc_(sc), outcome_(outcome) {}

    void table(const std::string& stem, const Table& t) {
        if (sc_.format == Format::csv)
            put(stem + ".csv", t.csv());
        else
            put(stem + ".json", t.json().dump(2) + "\n");
    }

    void json(const std::string& name, const Json& j) { put(name, j.dump(2) + "\n"); }

    void put(const std::string& name, const std::string& content) {
        const fs::path path = sc_.output_dir / name;
        write_file_atomic(path, content);
        outcome_.artifacts.push_back(path);
    }

private:
    const StudyConfig& sc_;
    RunOutcome& outcome_;
};

const std::vector<std::string> kMetricColumns{
    "E_Nn", "E_Nu", "E_Nn_s", "E_Nu_s", "lambda_n_eff", "E_Wn", "E_Wu", "p_balk", "p_band", "p_below"};
const std::vector<std::string> kObjectiveColumns{"R_u",      "R_n_ed",   "R_alt_rev", "B_cost",
                                                 "W_n_cost", "W_u_cost", "Z"};

std::vector<Json> metric_cells(const PerformanceMetrics& m) {
    return {m.E_Nn, m.E_Nu, m.E_Nn_s, m.E_Nu_s, m.lambda_n_eff, opt(m.E_Wn), opt(m.E_Wu),
            m.p_balk, m.p_band, m.p_below};
}

std::vector<Json> objective_cells(const ObjectiveBreakdown& o) {
    return {o.R_u, o.R_n_ed, o.R_alt_rev, o.B_cost, o.W_n_cost, o.W_u_cost, o.Z};
}

Json evaluation_json(const PerformanceMetrics& m, const ObjectiveBreakdown& o) {
    Json j = Json::object();
    const auto mc = metric_cells(m);
    const auto oc = objective_cells(o);
    for (std::size_t i = 0; i < mc.size(); ++i) j[kMetricColumns[i]] = mc[i];
    for (std::size_t i = 0; i < oc.size(); ++i) j[kObjectiveColumns[i]] = oc[i];
    return j;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

CapacityMode mode_of(const Json& block) { return parse_capacity_mode(block.at("mode").get<std::string>()); }

void run_solve(const StudyConfig& sc, Writer& w, std::ostream& log) {
    const SolveMethod method = sc.block.at("method") == "backward_recursion"
                                   ? SolveMethod::backward_recursion
                                   : SolveMethod::level_reduction;
    const QbdBlocks blocks = build_blocks(sc.params);
    const StationaryDistribution dist = solve(blocks, method);
    const PerformanceMetrics m = compute_metrics(dist, sc.params);
    const ObjectiveBreakdown o = compute_objective(m, sc.params);

    Table t(concat(concat({"theta"}, kMetricColumns), kObjectiveColumns));
    std::vector<Json> row{sc.params.theta};
    for (auto& c : metric_cells(m)) row.push_back(c);
    for (auto& c : objective_cells(o)) row.push_back(c);
    t.add(row);
    w.table("metrics", t);

    Table s({"level", "phase", "probability"});
    for (int i = 0; i <= dist.h(); ++i)
        for (int j = 0; j < dist.phases(); ++j) s.add({i, j, dist.pi(i, j)});
    w.table("stationary", s);

    Json summary = Json::object();
    summary["rho_u"] = dist.rho();
    summary["h"] = dist.h();
    summary["phases"] = dist.phases();
    summary["total_mass"] = dist.total_mass();
    summary["balance_residual"] = balance_residual(dist, blocks);
    summary["tail_level_count"] = tail_sums(dist).level_count;
    summary["tail_level_index"] = tail_sums(dist).level_index;
    summary["evaluation"] = evaluation_json(m, o);
    w.json("solve_summary.json", summary);

    if (sc.block.at("dump_blocks").get<bool>()) dump_blocks_csv(blocks, dist, sc.output_dir / "blocks");
    log << "Z = " << format_double(o.Z) << " at theta = " << sc.params.theta
        << ", E_Nn = " << format_double(m.E_Nn) << ", p_balk = " << format_double(m.p_balk) << "\n";
}

void run_optimize(const StudyConfig& sc, Writer& w, std::ostream& log) {
    const ThetaCurve curve = optimize_theta(sc.params, mode_of(sc.block));
    Table t(concat(concat(concat({"theta"}, kObjectiveColumns), kMetricColumns), {"is_best"}));
    for (const ThetaPoint& r : curve.rows) {
        std::vector<Json> row{r.theta};
        for (auto& c : objective_cells(r.objective)) row.push_back(c);
        for (auto& c : metric_cells(r.metrics)) row.push_back(c);
        row.push_back(r.theta == curve.theta_star);
        t.add(row);
    }
    w.table("theta_curve", t);
    Json summary = Json::object();
    summary["mode"] = std::string(to_string(curve.mode));
    summary["theta_star"] = curve.theta_star;
    summary["theta_star_over_k"] = static_cast<double>(curve.theta_star) / sc.params.k;
    summary["Z_star"] = curve.Z_star;
    summary["evaluation"] = evaluation_json(curve.best().metrics, curve.best().objective);
    w.json("optimize_summary.json", summary);
    log << "theta* = " << curve.theta_star << ", Z* = " << format_double(curve.Z_star) << "\n";
}

void run_capacity(const StudyConfig& sc, Writer& w, std::ostream& log) {
    const int c_total = sc.block.at("c_total").get<int>();
    const std::string mode = sc.block.at("mode").get<std::string>();
    Json summary = Json::object();
    summary["c_total"] = c_total;
    summary["mode"] = mode;
    if (mode == "both") {
        const auto rows = bed_combination_scan(sc.params, c_total);
        Table t({"c_u", "c_n", "nested_theta_star", "nested_Z", "fixed_stable", "fixed_intensity",
                 "fixed_theta_star", "fixed_Z", "difference", "verdict"});
        int nested_wins = 0, stable = 0;
        for (const auto& r : rows) {
            Json diff;
            std::string verdict = "FIXED UNSTABLE";
            if (r.fixed_Z) {
                ++stable;
                const double d = r.nested_Z - *r.fixed_Z;
                diff = d;
                verdict = d > 0 ? "nested" : (d < 0 ? "fixed" : "tie");
                if (d > 0) ++nested_wins;
            }
            t.add({r.c_u, r.c_n, r.nested_theta_star, r.nested_Z, r.fixed_stable, r.fixed_intensity,
                   opt(r.fixed_theta_star), opt(r.fixed_Z), diff, verdict});
        }
        w.table("bed_combinations", t);
        summary["fixed_stable_splits"] = stable;
        summary["nested_wins"] = nested_wins;
        log << "nested beats fixed on " << nested_wins << " of " << stable << " fixed-stable splits\n";
    } else {
        const CapacityScan scan = optimize_capacity(sc.params, c_total, parse_capacity_mode(mode));
        Table t({"c_u", "c_n", "stable", "intensity", "theta_star", "Z_star", "is_best"});
        for (std::size_t i = 0; i < scan.rows.size(); ++i) {
            const auto& r = scan.rows[i];
            t.add({r.c_u, r.c_n, r.stable, r.intensity, opt(r.theta_star), opt(r.Z_star),
                   scan.best && *scan.best == i});
        }
        w.table("capacity_scan", t);
        if (scan.best) {
            const auto& b = scan.rows[*scan.best];
            summary["best_c_u"] = b.c_u;
            summary["best_c_n"] = b.c_n;
            summary["theta_star"] = *b.theta_star;
            summary["Z_star"] = *b.Z_star;
            log << "best split c_u = " << b.c_u << ", c_n = " << b.c_n << ", Z* = " << format_double(*b.Z_star)
                << "\n";
        } else {
            log << "no stable split\n";
        }
    }
    w.json("capacity_summary.json", summary);
}

void run_compare_fixed(const StudyConfig& sc, Writer& w, std::ostream& log) {
    const std::vector<int> grid = sc.block.at("theta").get<std::vector<int>>();
    const auto rows = compare_nested_fixed(sc.params, grid);
    Table t({"theta", "nested_Z", "fixed_Z", "difference", "winner"});
    int wins = 0;
    for (const auto& r : rows) {
        t.add({r.theta, r.nested_Z, opt(r.fixed_Z), r.fixed_Z ? Json(r.difference) : Json(), r.winner});
        if (r.winner == "nested") ++wins;
    }
    w.table("compare_fixed", t);
    log << "nested wins " << wins << "/" << rows.size() << "\n";
}

Table tornado_table(const TornadoReport& rep) {
    Table t({"rank", "ratio", "base", "low", "high", "realized_low", "realized_high", "Z_low", "Z_high",
             "delta_low", "delta_high", "impact", "rel_impact_pct", "error"});
    for (const auto& r : rep.rows) {
        if (!r.error.empty()) {
            t.add({r.rank, r.ratio, Json(), Json(), Json(), Json(), Json(), Json(), Json(), Json(), Json(),
                   Json(), Json(), r.error});
            continue;
        }
        t.add({r.rank, r.ratio, r.base, r.low, r.high, r.realized_low, r.realized_high, r.Z_low, r.Z_high,
               r.delta_low, r.delta_high, r.impact, r.rel_impact_pct, Json()});
    }
    return t;
}

void run_tornado(const StudyConfig& sc, Writer& w, std::ostream& log) {
    TornadoOptions o;
    o.variation = sc.block.at("variation").get<double>();
    o.nominal_bed_ratio = sc.bed_ratio;
    ModelParams p = sc.params;
    const bool disabled = sc.block.at("model") == "disabled";
    if (disabled) {
        p = disabled_variant(p);
        o.ratios = disabled_ratio_names();
        o.optimize_baseline = false;
    }
    const TornadoReport rep = tornado(p, o);
    w.table("tornado", tornado_table(rep));
    Json summary = Json::object();
    summary["model"] = disabled ? "disabled" : "enabled";
    summary["theta"] = rep.theta;
    summary["Z0"] = rep.Z0;
    if (!rep.rows.empty()) {
        summary["top_ratio"] = rep.rows.front().ratio;
        summary["top_rel_impact_pct"] = rep.rows.front().rel_impact_pct;
        log << "top ratio " << rep.rows.front().ratio << " at "
            << format_double(rep.rows.front().rel_impact_pct) << "% of |Z0| = "
            << format_double(std::abs(rep.Z0)) << "\n";
    }
    w.json("tornado_summary.json", summary);
}

void run_scenarios(const StudyConfig& sc, Writer& w, std::ostream& log) {
    ScenarioOptions o;
    o.variation = sc.block.at("variation").get<double>();
    o.include_disabled = sc.block.at("include_disabled").get<bool>();
    o.nominal_bed_ratio = sc.bed_ratio;
    const auto cases = standard_cases(sc.block.at("shift").get<double>(), true);
    const auto rows = scenario_grid(sc.params, cases, o);
    Table t({"case", "description", "status", "baseline_obj", "theta_star", "theta_over_k", "top_ratio",
             "rel_impact_pct", "enabled_Z", "disabled_Z", "disabled_top_ratio", "disabled_rel_impact_pct",
             "benefit", "gain_pct", "note"});
    for (const auto& r : rows)
        t.add({r.name, r.description, r.status, opt(r.baseline_obj), opt(r.theta_star), opt(r.theta_over_k),
               text_or_null(r.top_ratio), opt(r.rel_impact_pct), opt(r.enabled_Z), opt(r.disabled_Z),
               text_or_null(r.disabled_top_ratio), opt(r.disabled_rel_impact_pct), opt(r.benefit),
               opt(r.gain_pct), text_or_null(r.note)});
    w.table("scenarios", t);
    log << rows.size() << " scenario cases\n";
}

void run_proportional(const StudyConfig& sc, Writer& w, std::ostream& log) {
    const std::string ratio = sc.block.at("ratio").get<std::string>();
    const auto rows = proportional_sweep(sc.params, ratio, sc.block.at("from").get<double>(),
                                         sc.block.at("to").get<double>(), sc.block.at("steps").get<int>());
    Table t({"ratio_value", "realized", "theta_star", "Z", "error"});
    for (const auto& r : rows)
        t.add({r.ratio_value, r.error.empty() ? Json(r.realized) : Json(), opt(r.theta_star), opt(r.Z),
               text_or_null(r.error)});
    w.table("sweep", t);
    log << ratio << " sweep, " << rows.size() << " points\n";
}

void run_simulate(const StudyConfig& sc, Writer& w, std::ostream& log) {
    SimConfig cfg;
    cfg.horizon = sc.block.at("horizon").get<double>();
    cfg.warmup = sc.block.at("warmup").get<double>();
    cfg.replications = sc.block.at("replications").get<int>();
    cfg.seed = sc.block.at("seed").get<std::uint64_t>();
    cfg.mode = mode_of(sc.block);
    if (sc.block.at("event_log").get<bool>()) cfg.event_log = sc.output_dir / "event_log.csv";
    const SimResult res = simulate(sc.params, cfg);
    const Evaluation analytic = evaluate(sc.params, cfg.mode);
    const Json exact = evaluation_json(analytic.metrics, analytic.objective);

    Table t({"metric", "mean", "half_width", "lower", "upper", "analytic", "analytic_in_ci"});
    int inside = 0, compared = 0;
    for (const auto& [name, e] : res.metrics) {
        const Json a = exact.at(name);
        Json in;
        if (e.defined && !a.is_null()) {
            const bool ok = std::abs(a.get<double>() - e.mean) <= e.half_width;
            in = ok;
            ++compared;
            inside += ok;
        }
        if (!e.defined)
            t.add({name, Json(), Json(), Json(), Json(), a, in});
        else
            t.add({name, e.mean, e.half_width, e.mean - e.half_width, e.mean + e.half_width, a, in});
    }
    w.table("simulation", t);

    Table c({"replication", "urgent_arrivals", "nonurgent_arrivals", "admissions", "redirections_accepted",
             "redirections_declined", "balks", "preemptions", "urgent_completions", "nonurgent_completions",
             "occupancy_consistency"});
    for (std::size_t r = 0; r < res.replications.size(); ++r) {
        const EventCounts& e = res.replications[r].window;
        c.add({static_cast<int>(r), e.urgent_arrivals, e.nonurgent_arrivals, e.admissions,
               e.redirections_accepted, e.redirections_declined, e.balks, e.preemptions,
               e.urgent_completions, e.nonurgent_completions, res.replications[r].occupancy_consistency});
    }
    w.table("replications", c);
    for (const auto& warn : res.warnings) log << "warning: " << warn << "\n";
    log << "analytic value inside the 95% CI for " << inside << " of " << compared << " metrics\n";
}

void run_validate(const StudyConfig& sc, Writer& w, std::ostream& log) {
    const QbdBlocks blocks = build_blocks(sc.params);
    const StationaryDistribution dist = solve(blocks);
    const double tol = sc.block.at("tolerance").get<double>();
    const double err = validate_mmc(dist, sc.params);
    Table t({"expected_relative_error", "tolerance", "pass", "total_mass", "balance_residual", "rho_u", "h"});
    t.add({err, tol, err <= tol, dist.total_mass(), balance_residual(dist, blocks), dist.rho(), dist.h()});
    w.table("validate", t);
    log << "expected relative error vs M/M/" << (sc.params.c_u + sc.params.c_n) << ": " << format_double(err)
        << (err <= tol ? " (ok)" : " (exceeds tolerance)") << "\n";
    if (!(err <= tol))
        throw NumericalError("expected relative error " + format_double(err) + " exceeds " + format_double(tol));
}

} // namespace

RunOutcome run(const StudyConfig& sc, std::ostream& log) {
    RunOutcome outcome;
    Writer w(sc, outcome);
    fs::create_directories(sc.output_dir);
    w.json("manifest.json", sc.resolved);
    const std::string& c = sc.command;
    if (c == "solve") run_solve(sc, w, log);
    else if (c == "optimize") run_optimize(sc, w, log);
    else if (c == "capacity") run_capacity(sc, w, log);
    else if (c == "compare-fixed") run_compare_fixed(sc, w, log);
    else if (c == "tornado") run_tornado(sc, w, log);
    else if (c == "scenarios") run_scenarios(sc, w, log);
    else if (c == "proportional") run_proportional(sc, w, log);
    else if (c == "simulate") run_simulate(sc, w, log);
    else if (c == "validate") run_validate(sc, w, log);
    else throw ParameterError("command", "unknown command '" + c + "'");
    return outcome;
}

} // namespace edflow::study
