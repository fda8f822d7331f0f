#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "edflow/model.hpp"

namespace edflow::study {

using Json = nlohmann::ordered_json;

enum class Format { csv, json };

const std::vector<std::string>& command_names();

// A config with every default filled in. `resolved` is what the manifest
// echoes; feeding it back through resolve_config gives the same object.
struct StudyConfig {
    std::string command;
    ModelParams params;
    std::optional<std::string> preset;
    std::optional<double> bed_ratio; // nominal c_u/c for sensitivity studies
    Format format = Format::csv;
    std::filesystem::path output_dir;
    Json block; // resolved command block
    Json resolved;
};

// Strict: unknown keys, wrong types and missing required fields throw
// ParameterError naming the key path. `output_dir` applies when the config
// does not set one.
StudyConfig resolve_config(const Json& config, std::string_view command,
                           const std::filesystem::path& output_dir);

Json params_to_json(const ModelParams& params);
// Every ModelParams field is required.
ModelParams params_from_json(const Json& object, std::string_view where);
// Applies a partial object of ModelParams fields.
void apply_overrides(ModelParams& params, const Json& overrides, std::string_view where);

// "0..24", "3" or a JSON array of integers.
std::vector<int> parse_int_list(const Json& value, std::string_view where);

struct RunOutcome {
    std::vector<std::filesystem::path> artifacts;
};

// Runs one command and writes its artifacts plus manifest.json. Progress and
// headline numbers go to `log`.
RunOutcome run(const StudyConfig& config, std::ostream& log);

// Exit status for an exception escaping run(): 2 for parameter, config and
// stability rejections, 1 for everything else.
int exit_code_for(const std::exception& error);

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kOutputDirEnv = "EDFLOW_OUT_DIR";

} // namespace edflow::study
