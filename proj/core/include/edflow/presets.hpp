#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edflow/model.hpp"

namespace edflow {

struct Preset {
    std::string name;
    std::string description;
    ModelParams params;
    // Bed split ratio c_u/c the preset was derived from, when c_u came from
    // rounding a nominal ratio rather than being given directly.
    std::optional<double> nominal_bed_ratio;
};

// rural, urban (alternative-clinic revenue), rural-tele, urban-tele
// (telemedicine revenue and its balking cost) and nested-vs-fixed.
const std::vector<Preset>& presets();

// Throws ParameterError("preset", ...) listing the known names.
const Preset& find_preset(std::string_view name);

} // namespace edflow
