#include <algorithm>
#include <cmath>
#include <set>

#include "edflow/errors.hpp"
#include "edflow/presets.hpp"
#include "edflow/sensitivity.hpp"
#include "edflow/study.hpp"

namespace edflow::study {

namespace {

std::string path_of(std::string_view where, std::string_view key) {
    return where.empty() ? std::string(key) : std::string(where) + "." + std::string(key);
}

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw ParameterError(path, what);
}

double as_number(const Json& v, const std::string& path) {
    if (!v.is_number()) bad(path, "expected a number");
    return v.get<double>();
}

long long as_integer(const Json& v, const std::string& path) {
    if (!v.is_number_integer()) bad(path, "expected an integer");
    return v.get<long long>();
}

int as_int(const Json& v, const std::string& path) {
    const long long n = as_integer(v, path);
    if (n < -2147483647LL || n > 2147483647LL) bad(path, "integer out of range");
    return static_cast<int>(n);
}

std::string as_string(const Json& v, const std::string& path) {
    if (!v.is_string()) bad(path, "expected a string");
    return v.get<std::string>();
}

bool as_bool(const Json& v, const std::string& path) {
    if (!v.is_boolean()) bad(path, "expected true or false");
    return v.get<bool>();
}

// Reads keys off one JSON object, records the resolved value of each and
// rejects whatever is left over.
class Reader {
public:
    Reader(const Json& object, std::string where) : object_(object), where_(std::move(where)) {
        if (!object_.is_object()) bad(where_.empty() ? "config" : where_, "expected an object");
    }

    const Json* find(const std::string& key) {
        seen_.insert(key);
        auto it = object_.find(key);
        return it == object_.end() ? nullptr : &*it;
    }

    double number(const std::string& key, std::optional<double> fallback) {
        const Json* v = find(key);
        if (!v && !fallback) bad(path(key), "required field is missing");
        const double x = v ? as_number(*v, path(key)) : *fallback;
        out[key] = x;
        return x;
    }

    int integer(const std::string& key, std::optional<int> fallback) {
        const Json* v = find(key);
        if (!v && !fallback) bad(path(key), "required field is missing");
        const int x = v ? as_int(*v, path(key)) : *fallback;
        out[key] = x;
        return x;
    }

    std::string text(const std::string& key, std::optional<std::string> fallback,
                     std::initializer_list<const char*> allowed = {}) {
        const Json* v = find(key);
        if (!v && !fallback) bad(path(key), "required field is missing");
        std::string x = v ? as_string(*v, path(key)) : *fallback;
        if (allowed.size() &&
            std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return x == a; })) {
            std::string list;
            for (const char* a : allowed) list += list.empty() ? a : std::string(", ") + a;
            bad(path(key), "expected one of " + list + ", got '" + x + "'");
        }
        out[key] = x;
        return x;
    }

    bool flag(const std::string& key, bool fallback) {
        const Json* v = find(key);
        const bool x = v ? as_bool(*v, path(key)) : fallback;
        out[key] = x;
        return x;
    }

    void finish() const {
        for (auto it = object_.begin(); it != object_.end(); ++it)
            if (!seen_.count(it.key())) bad(path(it.key()), "unknown field");
    }

    std::string path(const std::string& key) const { return path_of(where_, key); }

    Json out = Json::object();

private:
    const Json& object_;
    std::string where_;
    std::set<std::string> seen_;
};

struct IntField {
    const char* name;
    int ModelParams::*member;
};
struct RealField {
    const char* name;
    double ModelParams::*member;
};

constexpr RealField kReal[] = {
    {"lambda", &ModelParams::lambda}, {"p_u", &ModelParams::p_u},       {"mu_u", &ModelParams::mu_u},
    {"mu_n", &ModelParams::mu_n},     {"p_a", &ModelParams::p_a},       {"r_u_ed", &ModelParams::r_u_ed},
    {"r_n_ed", &ModelParams::r_n_ed}, {"r_alt", &ModelParams::r_alt},   {"c_b", &ModelParams::c_b},
    {"cw_u", &ModelParams::cw_u},     {"cw_n", &ModelParams::cw_n},     {"w_rev", &ModelParams::w_rev},
    {"w_balk", &ModelParams::w_balk}, {"w_wait", &ModelParams::w_wait},
};
constexpr IntField kInt[] = {
    {"c_u", &ModelParams::c_u}, {"c_n", &ModelParams::c_n}, {"k", &ModelParams::k}, {"theta", &ModelParams::theta}};

bool is_param(const std::string& key) {
    if (key == "waiting_cost_basis") return true;
    for (const auto& f : kReal)
        if (key == f.name) return true;
    for (const auto& f : kInt)
        if (key == f.name) return true;
    return false;
}

void set_param(ModelParams& p, const std::string& key, const Json& v, const std::string& path) {
    if (key == "waiting_cost_basis") {
        p.waiting_cost_basis = parse_waiting_cost_basis(as_string(v, path));
        return;
    }
    for (const auto& f : kReal)
        if (key == f.name) {
            p.*(f.member) = as_number(v, path);
            return;
        }
    for (const auto& f : kInt)
        if (key == f.name) {
            p.*(f.member) = as_int(v, path);
            return;
        }
    bad(path, "unknown field");
}

Json resolve_block(const std::string& command, const Json& raw, const std::string& where,
                   const ModelParams& p) {
    Reader r(raw, where);
    if (command == "solve") {
        r.text("method", "level_reduction", {"level_reduction", "backward_recursion"});
        r.flag("dump_blocks", false);
    } else if (command == "optimize") {
        r.text("mode", "nested", {"nested", "fixed"});
    } else if (command == "capacity") {
        const int c = r.integer("c_total", p.c_u + p.c_n);
        if (c < 2) bad(r.path("c_total"), "must be at least 2");
        r.text("mode", "both", {"nested", "fixed", "both"});
    } else if (command == "compare-fixed") {
        const Json* v = r.find("theta");
        std::vector<int> grid;
        if (v)
            grid = parse_int_list(*v, r.path("theta"));
        else
            for (int t = 0; t < p.k; ++t) grid.push_back(t);
        r.out["theta"] = grid;
    } else if (command == "tornado") {
        const double v = r.number("variation", 0.05);
        if (!(v >= 0.0 && v < 1.0)) bad(r.path("variation"), "must lie in [0, 1)");
        r.text("model", "enabled", {"enabled", "disabled"});
    } else if (command == "scenarios") {
        const double s = r.number("shift", 0.2);
        if (!(s >= 0.0 && s < 1.0)) bad(r.path("shift"), "must lie in [0, 1)");
        const double v = r.number("variation", 0.05);
        if (!(v >= 0.0 && v < 1.0)) bad(r.path("variation"), "must lie in [0, 1)");
        r.flag("include_disabled", true);
    } else if (command == "proportional") {
        const std::string ratio = r.text("ratio", std::nullopt);
        const auto& names = enabled_ratio_names();
        if (std::find(names.begin(), names.end(), ratio) == names.end())
            bad(r.path("ratio"), "unknown ratio '" + ratio + "'");
        r.number("from", std::nullopt);
        r.number("to", std::nullopt);
        if (r.integer("steps", 21) < 1) bad(r.path("steps"), "must be at least 1");
    } else if (command == "simulate") {
        r.number("horizon", 1e6);
        r.number("warmup", 1e3);
        if (r.integer("replications", 10) < 1) bad(r.path("replications"), "must be at least 1");
        const Json* seed = r.find("seed");
        if (seed && !seed->is_number_unsigned()) bad(r.path("seed"), "expected a nonnegative integer");
        r.out["seed"] = seed ? seed->get<std::uint64_t>() : std::uint64_t{1};
        r.text("mode", "nested", {"nested", "fixed"});
        r.flag("event_log", false);
    } else if (command == "validate") {
        if (!(r.number("tolerance", 1e-6) > 0.0)) bad(r.path("tolerance"), "must be positive");
    }
    r.finish();
    return r.out;
}

std::string block_key(std::string_view command) {
    std::string key(command);
    std::replace(key.begin(), key.end(), '-', '_');
    return key;
}

} // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"solve",     "optimize",     "capacity",
                                                "compare-fixed", "tornado", "scenarios",
                                                "proportional", "simulate", "validate"};
    return names;
}

Json params_to_json(const ModelParams& p) {
    Json j = Json::object();
    j["lambda"] = p.lambda;
    j["p_u"] = p.p_u;
    j["mu_u"] = p.mu_u;
    j["mu_n"] = p.mu_n;
    j["c_u"] = p.c_u;
    j["c_n"] = p.c_n;
    j["k"] = p.k;
    j["theta"] = p.theta;
    j["p_a"] = p.p_a;
    j["r_u_ed"] = p.r_u_ed;
    j["r_n_ed"] = p.r_n_ed;
    j["r_alt"] = p.r_alt;
    j["c_b"] = p.c_b;
    j["cw_u"] = p.cw_u;
    j["cw_n"] = p.cw_n;
    j["w_rev"] = p.w_rev;
    j["w_balk"] = p.w_balk;
    j["w_wait"] = p.w_wait;
    j["waiting_cost_basis"] = std::string(to_string(p.waiting_cost_basis));
    return j;
}

ModelParams params_from_json(const Json& object, std::string_view where) {
    if (!object.is_object()) bad(std::string(where), "expected an object");
    ModelParams p;
    std::set<std::string> seen;
    for (auto it = object.begin(); it != object.end(); ++it) {
        const std::string path = path_of(where, it.key());
        if (!is_param(it.key())) bad(path, "unknown field");
        set_param(p, it.key(), it.value(), path);
        seen.insert(it.key());
    }
    for (const auto& f : kReal)
        if (!seen.count(f.name)) bad(path_of(where, f.name), "required field is missing");
    for (const auto& f : kInt)
        if (!seen.count(f.name)) bad(path_of(where, f.name), "required field is missing");
    if (!seen.count("waiting_cost_basis"))
        bad(path_of(where, "waiting_cost_basis"), "required field is missing");
    return p;
}

void apply_overrides(ModelParams& params, const Json& overrides, std::string_view where) {
    if (!overrides.is_object()) bad(std::string(where), "expected an object");
    for (auto it = overrides.begin(); it != overrides.end(); ++it)
        set_param(params, it.key(), it.value(), path_of(where, it.key()));
}

std::vector<int> parse_int_list(const Json& value, std::string_view where) {
    const std::string path(where);
    std::vector<int> out;
    if (value.is_array()) {
        for (const auto& v : value) out.push_back(as_int(v, path));
    } else if (value.is_number_integer()) {
        out.push_back(as_int(value, path));
    } else if (value.is_string()) {
        const std::string s = value.get<std::string>();
        const auto dots = s.find("..");
        try {
            std::size_t used = 0;
            if (dots == std::string::npos) {
                out.push_back(std::stoi(s, &used));
                if (used != s.size()) throw std::invalid_argument(s);
            } else {
                const std::string a = s.substr(0, dots), b = s.substr(dots + 2);
                const int lo = std::stoi(a, &used);
                if (used != a.size()) throw std::invalid_argument(s);
                const int hi = std::stoi(b, &used);
                if (used != b.size()) throw std::invalid_argument(s);
                if (hi < lo) bad(path, "empty range '" + s + "'");
                for (int t = lo; t <= hi; ++t) out.push_back(t);
            }
        } catch (const std::logic_error&) {
            bad(path, "expected an integer or a range like 0..24, got '" + s + "'");
        }
    } else {
        bad(path, "expected an integer list, a range string or an integer");
    }
    if (out.empty()) bad(path, "empty list");
    return out;
}

StudyConfig resolve_config(const Json& config, std::string_view command,
                           const std::filesystem::path& output_dir) {
    const auto& names = command_names();
    if (std::find(names.begin(), names.end(), command) == names.end())
        bad("command", "unknown command '" + std::string(command) + "'");

    StudyConfig sc;
    sc.command = std::string(command);
    Reader top(config, "");

    if (const Json* tool = top.find("tool"); tool && as_string(*tool, "tool") != "edflow")
        bad("tool", "expected \"edflow\"");
    if (const Json* v = top.find("version")) as_string(*v, "version");
    if (const Json* c = top.find("command"); c && as_string(*c, "command") != command)
        bad("command", "config is for '" + c->get<std::string>() + "', not '" + std::string(command) + "'");

    const Json* scenario = top.find("scenario");
    if (!scenario) bad("scenario", "required field is missing");
    Reader sr(*scenario, "scenario");
    const Json* preset = sr.find("preset");
    const Json* params = sr.find("params");
    const Json* overrides = sr.find("overrides");
    const Json* label = sr.find("label");
    const Json* bed_ratio = sr.find("bed_ratio");
    sr.finish();
    if ((preset != nullptr) == (params != nullptr))
        bad("scenario", "exactly one of 'preset' and 'params' is required");
    if (preset) {
        const Preset& pr = find_preset(as_string(*preset, "scenario.preset"));
        sc.preset = pr.name;
        sc.params = pr.params;
        sc.bed_ratio = pr.nominal_bed_ratio;
        if (overrides) apply_overrides(sc.params, *overrides, "scenario.overrides");
    } else {
        if (overrides) bad("scenario.overrides", "only valid together with 'preset'");
        sc.params = params_from_json(*params, "scenario.params");
    }
    if (label) sc.preset = as_string(*label, "scenario.label");
    if (bed_ratio) {
        const double b = as_number(*bed_ratio, "scenario.bed_ratio");
        if (!(b > 0.0 && b < 1.0)) bad("scenario.bed_ratio", "must lie in (0, 1)");
        sc.bed_ratio = b;
    }
    validate(sc.params);

    const std::string fmt = [&] {
        const Json* f = top.find("format");
        return f ? as_string(*f, "format") : std::string("csv");
    }();
    if (fmt != "csv" && fmt != "json") bad("format", "expected csv or json");
    sc.format = fmt == "csv" ? Format::csv : Format::json;

    const Json* out = top.find("output_dir");
    sc.output_dir = out ? std::filesystem::path(as_string(*out, "output_dir")) : output_dir;

    for (const std::string& name : names) {
        const std::string key = block_key(name);
        const Json* raw = top.find(key);
        if (!raw && name != command) continue;
        const Json resolved = resolve_block(name, raw ? *raw : Json::object(), key, sc.params);
        if (name == command) sc.block = resolved;
    }
    top.finish();

    Json s = Json::object();
    if (sc.preset) s["label"] = *sc.preset;
    s["params"] = params_to_json(sc.params);
    if (sc.bed_ratio) s["bed_ratio"] = *sc.bed_ratio;
    sc.resolved = Json::object();
    sc.resolved["tool"] = "edflow";
    sc.resolved["version"] = kVersion;
    sc.resolved["command"] = sc.command;
    sc.resolved["scenario"] = s;
    sc.resolved["format"] = fmt;
    sc.resolved[block_key(command)] = sc.block;
    return sc;
}

int exit_code_for(const std::exception& error) {
    if (dynamic_cast<const ParameterError*>(&error)) return 2;
    if (dynamic_cast<const StabilityError*>(&error)) return 2;
    return 1;
}

} // namespace edflow::study
