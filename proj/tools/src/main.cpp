#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "edflow/errors.hpp"
#include "edflow/presets.hpp"
#include "edflow/study.hpp"

using edflow::study::Json;

namespace {

struct Common {
    std::string config;
    std::string preset;
    std::vector<std::string> sets;
    std::string out;
    std::string format;
};

Json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw edflow::ParameterError("config", "cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw edflow::ParameterError("config", path + ": " + e.what());
    }
}

// "3" -> 3, "0.5" -> 0.5, anything that is not JSON stays a string.
Json parse_value(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error&) {
        return text;
    }
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON config file");
    sub->add_option("--preset", c.preset, "named parameter set (see `edflow presets`)");
    sub->add_option("--set", c.sets, "override a model field, key=value (repeatable)");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

Json build_config(const std::string& command, const Common& c, const Json& block_flags) {
    Json cfg = c.config.empty() ? Json::object() : load_config(c.config);
    if (!cfg.is_object()) throw edflow::ParameterError("config", "top level must be an object");
    if (!c.preset.empty()) {
        Json& s = cfg["scenario"];
        if (!s.is_object()) s = Json::object();
        s.erase("params");
        s["preset"] = c.preset;
    }
    if (!cfg.contains("scenario")) throw edflow::ParameterError("scenario", "give --preset or --config");
    for (const std::string& kv : c.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw edflow::ParameterError("--set", "expected key=value, got '" + kv + "'");
        Json& s = cfg["scenario"];
        const std::string target = s.contains("params") ? "params" : "overrides";
        s[target][kv.substr(0, eq)] = parse_value(kv.substr(eq + 1));
    }
    if (!c.format.empty()) cfg["format"] = c.format;
    std::string key = command;
    std::replace(key.begin(), key.end(), '-', '_');
    for (auto it = block_flags.begin(); it != block_flags.end(); ++it) cfg[key][it.key()] = it.value();
    if (!c.out.empty()) cfg["output_dir"] = c.out;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"edflow: emergency department patient flow under threshold redirection"};
    app.require_subcommand(1);
    app.set_version_flag("--version", edflow::study::kVersion);

    Common common;
    Json flags = Json::object();
    std::string command;

    auto* presets_cmd = app.add_subcommand("presets", "list the built-in parameter sets");

    // Options whose value is only known after parsing are captured here and
    // copied into the command block afterwards.
    std::string method, mode, theta_list, ratio;
    int c_total = 0, steps = 0, replications = 0;
    double variation = 0, shift = 0, from = 0, to = 0, horizon = 0, warmup = 0, tolerance = 0;
    std::uint64_t seed = 0;
    bool dump_blocks = false, event_log = false, disabled = false, no_disabled = false;

    std::vector<std::pair<CLI::App*, std::string>> subs;
    auto sub = [&](const std::string& name, const std::string& help) {
        CLI::App* s = app.add_subcommand(name, help);
        add_common(s, common);
        subs.emplace_back(s, name);
        return s;
    };

    auto* solve = sub("solve", "stationary distribution and metrics at the configured theta");
    solve->add_option("--method", method)->check(CLI::IsMember({"level_reduction", "backward_recursion"}));
    solve->add_flag("--dump-blocks", dump_blocks, "write generator blocks to blocks/");

    auto* optimize = sub("optimize", "objective over theta = 0..k-1");
    optimize->add_option("--mode", mode)->check(CLI::IsMember({"nested", "fixed"}));

    auto* capacity = sub("capacity", "objective over every bed split c_u + c_n = c_total");
    capacity->add_option("--c-total", c_total);
    capacity->add_option("--mode", mode)->check(CLI::IsMember({"nested", "fixed", "both"}));

    auto* compare = sub("compare-fixed", "nested versus fixed partition per theta");
    compare->add_option("--theta", theta_list, "range such as 0..24");

    auto* tor = sub("tornado", "one-at-a-time ratio sensitivity at theta*");
    tor->add_option("--variation", variation);
    tor->add_flag("--disabled", disabled, "model with redirection turned off");

    auto* scen = sub("scenarios", "standard parameter shifts");
    scen->add_option("--shift", shift);
    scen->add_option("--variation", variation);
    scen->add_flag("--no-disabled", no_disabled, "skip the disabled-model comparison");

    auto* prop = sub("proportional", "sweep one ratio and re-optimize theta");
    prop->add_option("--ratio", ratio);
    prop->add_option("--from", from);
    prop->add_option("--to", to);
    prop->add_option("--steps", steps);

    auto* sim = sub("simulate", "discrete-event simulation with 95% intervals");
    sim->add_option("--horizon", horizon);
    sim->add_option("--warmup", warmup);
    sim->add_option("--replications", replications);
    sim->add_option("--seed", seed);
    sim->add_option("--mode", mode)->check(CLI::IsMember({"nested", "fixed"}));
    sim->add_flag("--event-log", event_log, "trace replication 0 to event_log.csv");

    auto* val = sub("validate", "aggregate check against the pooled M/M/c queue");
    val->add_option("--tolerance", tolerance);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (presets_cmd->parsed()) {
        for (const auto& p : edflow::presets())
            std::cout << p.name << "\t" << p.description << "\n";
        return 0;
    }

    CLI::App* active = nullptr;
    for (auto& [s, name] : subs)
        if (s->parsed()) active = s, command = name;

    auto given = [&](const char* opt) {
        const CLI::Option* o = active->get_option_no_throw(opt);
        return o != nullptr && o->count() > 0;
    };
    if (given("--method")) flags["method"] = method;
    if (given("--dump-blocks")) flags["dump_blocks"] = dump_blocks;
    if (given("--mode")) flags["mode"] = mode;
    if (given("--c-total")) flags["c_total"] = c_total;
    if (given("--theta")) flags["theta"] = theta_list;
    if (given("--variation")) flags["variation"] = variation;
    if (given("--disabled")) flags["model"] = "disabled";
    if (given("--shift")) flags["shift"] = shift;
    if (given("--no-disabled")) flags["include_disabled"] = false;
    if (given("--ratio")) flags["ratio"] = ratio;
    if (given("--from")) flags["from"] = from;
    if (given("--to")) flags["to"] = to;
    if (given("--steps")) flags["steps"] = steps;
    if (given("--horizon")) flags["horizon"] = horizon;
    if (given("--warmup")) flags["warmup"] = warmup;
    if (given("--replications")) flags["replications"] = replications;
    if (given("--seed")) flags["seed"] = seed;
    if (given("--event-log")) flags["event_log"] = event_log;
    if (given("--tolerance")) flags["tolerance"] = tolerance;

    try {
        const Json cfg = build_config(command, common, flags);
        // The environment only supplies a default; a config's output_dir wins.
        const char* env = std::getenv(edflow::study::kOutputDirEnv);
        const auto sc = edflow::study::resolve_config(cfg, command, env && *env ? env : "edflow-out");
        const auto outcome = edflow::study::run(sc, std::cerr);
        for (const auto& path : outcome.artifacts) std::cout << path.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "edflow " << command << ": " << e.what() << "\n";
        return edflow::study::exit_code_for(e);
    }
}
