#include "edflow/presets.hpp"

#include "edflow/errors.hpp"

namespace edflow {

namespace {

// Shared economics of the two case-study hospitals.
ModelParams case_study(double lambda, double p_u, int c_total, int k, int theta) {
    ModelParams p;
    p.lambda = lambda;
    p.p_u = p_u;
    p.mu_u = 0.15;
    p.mu_n = 0.32;
    p.c_u = round_half_up(0.4 * c_total);
    p.c_n = c_total - p.c_u;
    p.k = k;
    p.theta = theta;
    p.p_a = 0.52;
    p.r_u_ed = 2221.0;
    p.r_n_ed = 675.5;
    p.r_alt = 436.0;
    p.c_b = 550.96;
    p.cw_u = 5531.61;
    p.cw_n = 53.21;
    return p;
}

ModelParams tele(ModelParams p) {
    p.r_alt = 116.5;
    p.c_b = 384.82;
    return p;
}

std::vector<Preset> build() {
    const ModelParams rural = case_study(2.0, 0.39, 9, 37, 5);
    const ModelParams urban = case_study(5.0, 0.85, 34, 39, 27);

    ModelParams nvf;
    nvf.lambda = 20.0;
    nvf.p_u = 0.8;
    nvf.mu_u = 4.0;
    nvf.mu_n = 6.0;
    nvf.c_u = 8;
    nvf.c_n = 10;
    nvf.k = 25;
    nvf.theta = 20;
    nvf.p_a = 0.5;
    nvf.r_n_ed = 100.0;
    nvf.r_alt = 40.0;
    nvf.c_b = 30.0;
    nvf.cw_n = 20.0;
    nvf.r_u_ed = 200.0;
    nvf.cw_u = 30.0;

    return {
        {"rural", "rural ED, 9 beds, alternative clinic referral", rural, 0.4},
        {"urban", "urban ED, 34 beds, alternative clinic referral", urban, 0.4},
        {"rural-tele", "rural ED, 9 beds, telemedicine referral", tele(rural), 0.4},
        {"urban-tele", "urban ED, 34 beds, telemedicine referral", tele(urban), 0.4},
        {"nested-vs-fixed", "18-bed ED used for the nested vs fixed partition comparison", nvf,
         std::nullopt},
    };
}

} // namespace

const std::vector<Preset>& presets() {
    static const std::vector<Preset> all = build();
    return all;
}

const Preset& find_preset(std::string_view name) {
    std::string known;
    for (const Preset& p : presets()) {
        if (p.name == name) return p;
        known += known.empty() ? p.name : ", " + p.name;
    }
    throw ParameterError("preset", "unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

} // namespace edflow
