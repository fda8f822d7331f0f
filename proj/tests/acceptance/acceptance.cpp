// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dense_oracle.hpp"
#include "edflow/fixed_partition.hpp"
#include "edflow/io.hpp"
#include "edflow/metrics.hpp"
#include "edflow/policy.hpp"
#include "edflow/presets.hpp"
#include "edflow/qbd.hpp"
#include "edflow/sensitivity.hpp"
#include "edflow/simulation.hpp"
#include "instances.hpp"

using namespace edflow;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// Collects named checks; a criterion passes when every check does.
class Checks {
public:
    void near(const std::string& what, double got, double want, double tol) {
        add(what + " = " + fmt(got, 8) + " (want " + fmt(want) + " +- " + fmt(tol) + ")",
            std::abs(got - want) <= tol);
    }
    void add(const std::string& what, bool ok) {
        lines_.push_back((ok ? "    ok    " : "    MISS  ") + what);
        ok_ = ok_ && ok;
    }
    void note(const std::string& what) { lines_.push_back("    note  " + what); }
    bool ok() const { return ok_; }
    void print() const {
        for (const auto& l : lines_) std::cout << l << "\n";
    }

private:
    std::vector<std::string> lines_;
    bool ok_ = true;
};

struct Instance {
    std::string name;
    ModelParams params;
};

std::vector<Instance> preset_instances() {
    return {{"rural", find_preset("rural").params},
            {"urban", find_preset("urban").params},
            {"nested-vs-fixed", find_preset("nested-vs-fixed").params}};
}

std::vector<Instance> random_instances() {
    std::vector<Instance> out;
    for (auto& in : oracle::random_instances(20260101, 20, 40)) out.push_back({in.name, in.params});
    return out;
}

std::vector<Instance> all_instances() {
    auto v = preset_instances();
    for (auto& in : random_instances()) v.push_back(in);
    return v;
}

// --- 1 -------------------------------------------------------------------

bool mmc_validation(Checks& c) {
    for (const char* name : {"rural", "urban"}) {
        const auto t0 = Clock::now();
        const auto p = find_preset(name).params;
        const double err = validate_mmc(solve(p), p);
        const double dt = seconds_since(t0);
        c.add(std::string(name) + " expected relative error " + fmt(err) + " <= 1e-6", err <= 1e-6);
        c.add(std::string(name) + " runtime " + fmt(dt, 3) + " s < 1 s", dt < 1.0);
    }
    return c.ok();
}

// --- 2, 3 ----------------------------------------------------------------

struct CaseTarget {
    int theta;
    double E_Nn, tol_Nn;
    double leff, tol_leff;
    double E_Wn, tol_Wn;
    std::optional<double> in_service;
    double tol_s;
    double p_balk, tol_balk;
};

bool case_study(Checks& c, const char* preset, const CaseTarget& t) {
    const auto curve = optimize_theta(find_preset(preset).params);
    const auto& m = curve.best().metrics;
    c.add("theta* = " + std::to_string(curve.theta_star) + " (want " + std::to_string(t.theta) + ")",
          curve.theta_star == t.theta);
    if (std::abs(curve.theta_star - t.theta) == 1)
        c.note("theta* is off by one; metric targets defer to the oracle comparison");
    c.near("E_Nn", m.E_Nn, t.E_Nn, t.tol_Nn);
    c.near("lambda_n_eff", m.lambda_n_eff, t.leff, t.tol_leff);
    c.near("E_Wn", m.E_Wn.value_or(NAN), t.E_Wn, t.tol_Wn);
    if (t.in_service) c.near("E_Nn_s", m.E_Nn_s, *t.in_service, t.tol_s);
    c.near("p_balk", m.p_balk, t.p_balk, t.tol_balk);
    c.note("Z* = " + fmt(curve.Z_star, 12));
    // diagnostic only: where on the curve the target tuple actually sits
    const auto& at20 = curve.rows.at(20).metrics;
    c.note("at theta = 20: E_Nn " + fmt(at20.E_Nn, 4) + ", lambda_n_eff " + fmt(at20.lambda_n_eff, 3) +
           ", E_Wn " + fmt(at20.E_Wn.value_or(NAN), 4) + ", E_Nn_s " + fmt(at20.E_Nn_s, 3) + ", p_balk " +
           fmt(at20.p_balk, 2));
    return c.ok();
}

bool rural_case(Checks& c) {
    return case_study(c, "rural", {5, 11.08, 0.02, 1.01, 0.01, 10.97, 0.05, 3.15, 0.02, 0.01, 0.005});
}

bool urban_case(Checks& c) {
    return case_study(c, "urban", {27, 1.56, 0.02, 0.32, 0.01, 4.90, 0.05, std::nullopt, 0.0, 0.14, 0.01});
}

// --- 4, 5, 6 -------------------------------------------------------------

bool economics(Checks& c) {
    const auto t0 = Clock::now();
    const auto curve = optimize_theta(find_preset("nested-vs-fixed").params);
    const double dt = seconds_since(t0);
    c.add("grid size " + std::to_string(curve.rows.size()) + " = 25", curve.rows.size() == 25);
    c.near("Z(0)", curve.rows.at(0).objective.Z, 3353.33, 0.01);
    c.near("Z(20)", curve.rows.at(20).objective.Z, 3466.67, 0.01);
    for (const auto& r : curve.rows)
        if (r.theta >= 17) c.near("Z(" + std::to_string(r.theta) + ")", r.objective.Z, 3466.67, 0.01);
    c.add("runtime " + fmt(dt, 3) + " s < 5 s", dt < 5.0);
    return c.ok();
}

bool dominance(Checks& c) {
    const auto p = find_preset("nested-vs-fixed").params;
    std::vector<int> grid;
    for (int t = 0; t < p.k; ++t) grid.push_back(t);
    const auto rows = compare_nested_fixed(p, grid);
    int wins = 0;
    for (const auto& r : rows)
        if (r.fixed_Z && r.nested_Z >= *r.fixed_Z) ++wins;
    c.add("nested >= fixed on " + std::to_string(wins) + "/" + std::to_string(rows.size()) + " rows",
          wins == 25 && rows.size() == 25);
    c.note("fixed Z(0) = " + fmt(rows.at(0).fixed_Z.value_or(NAN), 10) +
           ", fixed Z(20) = " + fmt(rows.at(20).fixed_Z.value_or(NAN), 10));
    return c.ok();
}

bool stability_grid(Checks& c) {
    const auto rows = bed_combination_scan(find_preset("nested-vs-fixed").params, 18);
    c.add("17 splits", rows.size() == 17);
    for (const auto& r : rows) {
        const bool want = r.c_u >= 5;
        c.add("c_u = " + std::to_string(r.c_u) + (r.fixed_stable ? " stable" : " FIXED UNSTABLE") +
                  " (intensity " + fmt(r.fixed_intensity) + ")",
              r.fixed_stable == want);
    }
    return c.ok();
}

// --- 7 -------------------------------------------------------------------

std::vector<std::pair<std::string, std::optional<double>>> analytic_values(const ModelParams& p) {
    const auto e = evaluate(p);
    const auto& m = e.metrics;
    const auto& o = e.objective;
    return {{"E_Nn", m.E_Nn},         {"E_Nu", m.E_Nu},         {"E_Nn_s", m.E_Nn_s},
            {"E_Nu_s", m.E_Nu_s},     {"lambda_n_eff", m.lambda_n_eff},
            {"E_Wn", m.E_Wn},         {"E_Wu", m.E_Wu},         {"p_balk", m.p_balk},
            {"p_band", m.p_band},     {"p_below", m.p_below},   {"R_u", o.R_u},
            {"R_n_ed", o.R_n_ed},     {"R_alt_rev", o.R_alt_rev}, {"B_cost", o.B_cost},
            {"W_n_cost", o.W_n_cost}, {"W_u_cost", o.W_u_cost}, {"Z", o.Z}};
}

bool oracle_equivalence(Checks& c) {
    const auto t0 = Clock::now();
    SimConfig cfg;
    cfg.horizon = 1e6;
    cfg.warmup = 1e3;
    cfg.replications = 10;
    cfg.seed = 1;

    int compared = 0, missed = 0;
    std::map<std::string, std::pair<int, int>> side; // metric -> (above, below)
    for (const auto& in : all_instances()) {
        const auto sim = simulate(in.params, cfg);
        int inst_missed = 0;
        for (const auto& [name, value] : analytic_values(in.params)) {
            const Estimate& e = sim.get(name);
            if (!value || !e.defined) continue;
            ++compared;
            const double d = *value - e.mean;
            if (std::abs(d) > e.half_width) {
                ++missed;
                ++inst_missed;
                (d > 0 ? side[name].first : side[name].second)++;
                c.add(in.name + " " + name + ": analytic " + fmt(*value, 10) + " outside " + fmt(e.mean, 10) +
                          " +- " + fmt(e.half_width, 4),
                      false);
            }
        }
        if (inst_missed == 0) c.add(in.name + ": all metrics inside the 95% CI", true);
    }
    c.note(std::to_string(missed) + " of " + std::to_string(compared) +
           " comparisons outside the 95% CI; about " + fmt(0.05 * compared, 3) +
           " expected by chance if the model is exact");

    int dense_checked = 0;
    for (const auto& in : all_instances()) {
        const auto d = solve(in.params);
        if (d.h() > 10) continue;
        ++dense_checked;
        const double l1 = oracle::l1_distance(d, oracle::dense_stationary(in.params, 200));
        c.add(in.name + " l1 to dense solve " + fmt(l1) + " <= 1e-8", l1 <= 1e-8);
    }
    c.add(std::to_string(dense_checked) + " instances with h <= 10 checked against the dense solve",
          dense_checked > 0);
    const double dt = seconds_since(t0);
    c.add("runtime " + fmt(dt, 4) + " s <= 600 s", dt <= 600.0);
    return c.ok();
}

// --- 8 -------------------------------------------------------------------

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(a)); }

bool invariants(Checks& c) {
    auto instances = all_instances();
    for (const auto& in : instances) {
        const auto& p = in.params;
        const auto blocks = build_blocks(p);
        const auto dist = solve(blocks);
        const auto m = compute_metrics(dist, p);
        const auto o = compute_objective(m, p);
        const double lu = p.lambda * p.p_u, ln = p.lambda - lu;
        bool ok = true;
        std::string why;
        auto need = [&](bool cond, const std::string& what) {
            if (!cond) {
                ok = false;
                why += " " + what;
            }
        };
        need(std::abs(dist.total_mass() - 1.0) <= 1e-10, "normalization");
        need(balance_residual(dist, blocks) <= 1e-9, "balance");
        need(std::abs(p.mu_u * m.E_Nu_s - lu) <= 1e-8 * lu, "urgent-throughput");
        need(std::abs(p.mu_n * m.E_Nn_s - m.lambda_n_eff) <= 1e-8 * std::max(m.lambda_n_eff, 1e-300),
             "nonurgent-throughput");
        need(p.r_u_ed == 0.0 || std::abs(o.R_u / p.r_u_ed - lu) <= 1e-8 * lu, "revenue-throughput");
        need(std::abs(m.lambda_n_eff + ln * p.p_a * m.p_band + ln * m.p_balk - ln) <= 1e-9, "admission");

        std::vector<double> levels;
        for (int theta : {0, p.k / 2, p.k - 1}) {
            auto q = p;
            q.theta = theta;
            const auto d = solve(q);
            const auto mq = compute_metrics(d, q);
            const auto oq = compute_objective(mq, q);
            for (int i = 0; i <= d.h() + 5; ++i) {
                if (levels.size() <= static_cast<std::size_t>(i)) levels.push_back(d.level_mass(i));
                need(std::abs(d.level_mass(i) - levels[i]) <= 1e-10, "level-marginal");
            }
            need(close_rel(mq.E_Nu, m.E_Nu, 1e-10) && close_rel(mq.E_Nu_s, m.E_Nu_s, 1e-10) &&
                     close_rel(oq.R_u, o.R_u, 1e-10) && close_rel(oq.W_u_cost, o.W_u_cost, 1e-10),
                 "urgent-terms");
        }

        auto off = p;
        off.p_a = 0.0;
        off.theta = 0;
        const auto flat = optimize_theta(off);
        const double z0 = flat.rows.front().objective.Z;
        bool is_flat = true;
        for (const auto& r : flat.rows) is_flat = is_flat && close_rel(r.objective.Z, z0, 1e-9);
        need(is_flat, "p_a=0-flatness");
        c.add(in.name + (ok ? "" : ":" + why), ok);
    }
    return c.ok();
}

// --- 9 -------------------------------------------------------------------

double top_impact(const TornadoReport& t, Checks& c, const std::string& label) {
    const auto& top = t.rows.front();
    c.add(label + " top ratio " + top.ratio + " (want waiting_ratio)", top.ratio == "waiting_ratio");
    return top.rel_impact_pct;
}

const ScenarioRow* find_row(const std::vector<ScenarioRow>& rows, const std::string& name) {
    for (const auto& r : rows)
        if (r.name == name) return &r;
    return nullptr;
}

void gain_check(Checks& c, const std::vector<ScenarioRow>& rows, const std::string& label,
                const std::string& name, double want, double tol) {
    const ScenarioRow* r = find_row(rows, name);
    if (!r || !r->gain_pct) {
        c.add(label + " " + name + ": no gain (status " + (r ? r->status : "missing") +
                  (r && !r->note.empty() ? ", " + r->note : "") + ")",
              false);
        return;
    }
    c.near(label + " " + name + " gain %", *r->gain_pct, want, tol);
}

bool sensitivity(Checks& c) {
    const auto& rural = find_preset("rural");
    const auto& urban = find_preset("urban");
    TornadoOptions o;
    o.nominal_bed_ratio = rural.nominal_bed_ratio;
    c.near("rural enabled waiting impact %", top_impact(tornado(rural.params, o), c, "rural enabled"), 10.81,
           0.2);
    o.nominal_bed_ratio = urban.nominal_bed_ratio;
    c.near("urban enabled waiting impact %", top_impact(tornado(urban.params, o), c, "urban enabled"), 10.63,
           0.2);
    TornadoOptions d;
    d.ratios = disabled_ratio_names();
    d.optimize_baseline = false;
    d.nominal_bed_ratio = rural.nominal_bed_ratio;
    c.near("rural disabled waiting impact %",
           top_impact(tornado(disabled_variant(rural.params), d), c, "rural disabled"), 10.45, 0.2);

    ScenarioOptions so;
    so.nominal_bed_ratio = rural.nominal_bed_ratio;
    const auto rural_rows = scenario_grid(rural.params, standard_cases(), so);
    gain_check(c, rural_rows, "rural", "Baseline", 3.31, 0.3);
    gain_check(c, rural_rows, "rural", "High Balking Threshold", 4.84, 0.3);
    so.nominal_bed_ratio = urban.nominal_bed_ratio;
    const auto urban_rows = scenario_grid(urban.params, standard_cases(), so);
    gain_check(c, urban_rows, "urban", "High Urgent Proportion", 5.90, 0.5);
    return c.ok();
}

// --- 10 ------------------------------------------------------------------

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

bool run_suite(const fs::path& dir, Checks& c) {
    const std::string cli = EDFLOW_CLI_PATH;
    const std::vector<std::pair<std::string, std::string>> jobs{
        {"solve", "solve --preset rural --dump-blocks"},
        {"optimize-rural", "optimize --preset rural"},
        {"optimize-urban", "optimize --preset urban"},
        {"capacity", "capacity --preset nested-vs-fixed --c-total 18"},
        {"compare-fixed", "compare-fixed --preset nested-vs-fixed --theta 0..24"},
        {"tornado", "tornado --preset rural"},
        {"tornado-disabled", "tornado --preset rural --disabled"},
        {"scenarios", "scenarios --preset urban"},
        {"proportional", "proportional --preset rural --ratio waiting_ratio --from 50 --to 150 --steps 5"},
        {"simulate", "simulate --preset rural --horizon 2e4 --warmup 100 --replications 3 --seed 5 --event-log"},
        {"validate", "validate --preset urban"},
    };
    bool ok = true;
    for (const auto& [name, args] : jobs) {
        const std::string cmd = "\"" + cli + "\" " + args + " --out \"" + (dir / name).string() + "\" >/dev/null 2>&1";
        const int rc = std::system(cmd.c_str());
        if (rc != 0) {
            c.add("edflow " + args + " exited with " + std::to_string(rc), false);
            ok = false;
        }
    }
    return ok;
}

bool determinism(Checks& c) {
    const fs::path root = fs::temp_directory_path() / "edflow_acceptance_determinism";
    fs::remove_all(root);
    if (!run_suite(root / "a", c) || !run_suite(root / "b", c)) return false;
    int files = 0, differ = 0;
    for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), root / "a");
        ++files;
        if (read_bytes(entry.path()) != read_bytes(root / "b" / rel)) {
            ++differ;
            c.add(rel.string() + " differs between runs", false);
        }
    }
    int csv = 0;
    for (const auto& entry : fs::recursive_directory_iterator(root / "b"))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") ++csv;
    c.add(std::to_string(files - differ) + "/" + std::to_string(files) + " artifacts byte-identical (" +
              std::to_string(csv) + " CSV per run)",
          differ == 0 && files > 0);
    fs::remove_all(root);
    return c.ok();
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<bool(Checks&)>>> criteria{
        {"M/M/c marginal validation", mmc_validation},
        {"rural case study", rural_case},
        {"urban case study", urban_case},
        {"nested economics on the comparison preset", economics},
        {"nested dominance over fixed partition", dominance},
        {"fixed-mode stability grid", stability_grid},
        {"oracle equivalence (simulation and dense solve)", oracle_equivalence},
        {"invariant suite", invariants},
        {"sensitivity reproduction", sensitivity},
        {"determinism of CLI artifacts", determinism},
    };
    std::set<int> only;
    for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));

    int passed = 0, run = 0;
    for (std::size_t n = 0; n < criteria.size(); ++n) {
        const int id = static_cast<int>(n + 1);
        if (!only.empty() && !only.count(id)) continue;
        ++run;
        Checks c;
        bool ok = false;
        const auto t0 = Clock::now();
        try {
            ok = criteria[n].second(c);
        } catch (const std::exception& e) {
            c.add(std::string("exception: ") + e.what(), false);
        }
        std::cout << "criterion " << id << ": " << (ok ? "PASS" : "FAIL") << "  " << criteria[n].first << "  ["
                  << fmt(seconds_since(t0), 3) << " s]\n";
        c.print();
        std::cout.flush();
        passed += ok;
    }
    std::cout << passed << "/" << run << " criteria passed\n";
    return passed == run ? 0 : 1;
}
