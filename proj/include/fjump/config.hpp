#pragma once

// Experiment configuration: one JSON file, SI units exclusively (key names
// carry the unit). Unknown keys are rejected with their path. Defaults
// reproduce the nominal operating point of params.hpp.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fjump/constants.hpp"
#include "fjump/covariance.hpp"
#include "fjump/dynamics.hpp"
#include "fjump/errors.hpp"
#include "fjump/params.hpp"

namespace fjump {

struct ExperimentConfig {
    // particle
    double diameter = 177e-9;
    double density = 1850.0;
    int n_charges = 1;
    double t_bath = 293.0;
    double gamma_heat = constants::two_pi * 926e3;  // rad/s
    double gamma = -1.0;                            // rad/s; < 0: derive from gamma_heat
    // optical
    double omega_x = constants::two_pi * 44e3;
    double omega_y = constants::two_pi * 58e3;
    // paul
    double omega_rf = constants::two_pi * 33e3;
    double a_u = 0.0;
    double q_u = 0.4879455145368951;  // secular mode at 2pi x 6 kHz
    double a_v = std::numeric_limits<double>::quiet_NaN();  // NaN: use a_u
    double q_v = std::numeric_limits<double>::quiet_NaN();  // NaN: use -q_u
    double rf_phase0 = 0.0;
    // init
    double t_x = 0.155;
    double t_y = 0.155;
    // sweep
    double t_d_start = 0.0;
    double t_d_stop = 170e-6;
    double t_d_step = 10e-6;
    // ensemble
    int n_shots = 500;
    std::uint64_t base_seed = 1;
    int threads = 0;  // 0: hardware concurrency
    // protocol
    double t_pre = 0.0;
    double t_post = 760e-6;
    double trigger_jitter = 2e-6;
    double fixed_delay = 1.5e-6;
    double escape_radius = 300e-9;
    // pipeline
    double bandwidth_hz = 2000.0;
    double discard = 120e-6;
    double noise_var = 2.5e-18;
    int bootstrap_n = 1000;
    double f_offtone_hz = 250e3;
    std::string pipeline_mode = "retrodict";  // or "true_state"
    bool estimate_frequency = false;
    // models
    bool model_simple = true;
    bool model_full = true;
    bool model_montecarlo = false;
    // floquet
    int n_max = 5;

    ParticleParams particle() const {
        const OpticalTrap opt = optical();
        if (gamma >= 0.0) {
            const double gh = gamma_heat_explicit
                                  ? gamma_heat
                                  : heating_rate_from_damping(gamma, t_bath, opt.omega_u_eff);
            return make_particle(diameter, density, n_charges, t_bath, gamma, opt, gh);
        }
        return make_particle_from_heating(diameter, density, n_charges, t_bath, gamma_heat, opt);
    }
    OpticalTrap optical() const { return make_optical_trap(omega_x, omega_y); }
    PaulTrap paul() const { return make_paul_trap(omega_rf, a_u, q_u, rf_phase0, a_v, q_v); }
    ThermalInit init() const { return make_thermal_init(t_x, t_y, particle(), optical()); }
    ProtocolSchedule schedule(double t_d = 0.0) const {
        ProtocolSchedule s;
        s.t_pre = t_pre;
        s.t_d = t_d;
        s.t_post = t_post;
        s.trigger_jitter = trigger_jitter;
        s.fixed_delay = fixed_delay;
        s.rf_phase0 = rf_phase0;
        s.escape_radius = escape_radius;
        return s;
    }
    PipelineConfig pipeline() const {
        PipelineConfig pc;
        pc.retrodict = pipeline_mode == "retrodict";
        pc.bandwidth_hz = bandwidth_hz;
        pc.discard = discard;
        pc.noise_floor_target = noise_var;
        pc.f_offtone_hz = f_offtone_hz;
        pc.bootstrap_n = bootstrap_n;
        pc.estimate_frequency = estimate_frequency;
        return pc;
    }
    std::vector<double> sweep_times() const {
        std::vector<double> ts;
        if (t_d_step <= 0.0) throw ConfigError("sweep.t_d_step_s must be positive");
        for (double t = t_d_start; t <= t_d_stop + 1e-12; t += t_d_step) ts.push_back(t);
        return ts;
    }

    bool gamma_heat_explicit = false;  // both gamma and gamma_heat given in the file
};

namespace detail {

inline void require_keys(const nlohmann::ordered_json& j, const char* path,
                         std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError(std::string("unknown key '") + path + "." + it.key() + "'");
    }
}

template <typename T>
void get_if(const nlohmann::ordered_json& j, const char* key, T& out, const char* path) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad value for '") + path + "." + key + "': " + e.what());
    }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::ordered_json& j) {
    ExperimentConfig c;
    detail::require_keys(j, "$",
                         {"particle", "optical", "paul", "init", "sweep", "n_shots", "base_seed",
                          "threads", "protocol", "pipeline", "models", "floquet"});
    if (j.contains("particle")) {
        const auto& p = j.at("particle");
        detail::require_keys(p, "particle",
                             {"diameter_m", "density_kg_m3", "n_charges", "t_bath_k",
                              "gamma_heat_rad_s", "gamma_rad_s"});
        detail::get_if(p, "diameter_m", c.diameter, "particle");
        detail::get_if(p, "density_kg_m3", c.density, "particle");
        detail::get_if(p, "n_charges", c.n_charges, "particle");
        detail::get_if(p, "t_bath_k", c.t_bath, "particle");
        detail::get_if(p, "gamma_heat_rad_s", c.gamma_heat, "particle");
        detail::get_if(p, "gamma_rad_s", c.gamma, "particle");
        c.gamma_heat_explicit = p.contains("gamma_heat_rad_s") && p.contains("gamma_rad_s");
    }
    if (j.contains("optical")) {
        const auto& p = j.at("optical");
        detail::require_keys(p, "optical", {"omega_x_rad_s", "omega_y_rad_s"});
        detail::get_if(p, "omega_x_rad_s", c.omega_x, "optical");
        detail::get_if(p, "omega_y_rad_s", c.omega_y, "optical");
    }
    if (j.contains("paul")) {
        const auto& p = j.at("paul");
        detail::require_keys(p, "paul",
                             {"omega_rf_rad_s", "a_u", "q_u", "a_v", "q_v", "rf_phase0_rad"});
        detail::get_if(p, "omega_rf_rad_s", c.omega_rf, "paul");
        detail::get_if(p, "a_u", c.a_u, "paul");
        detail::get_if(p, "q_u", c.q_u, "paul");
        detail::get_if(p, "a_v", c.a_v, "paul");
        detail::get_if(p, "q_v", c.q_v, "paul");
        detail::get_if(p, "rf_phase0_rad", c.rf_phase0, "paul");
    }
    if (j.contains("init")) {
        const auto& p = j.at("init");
        detail::require_keys(p, "init", {"t_com_k", "t_x_k", "t_y_k"});
        if (p.contains("t_com_k") && (p.contains("t_x_k") || p.contains("t_y_k")))
            throw ConfigError("init: give either t_com_k or (t_x_k, t_y_k), not both");
        if (p.contains("t_com_k")) {
            double t = c.t_x;
            detail::get_if(p, "t_com_k", t, "init");
            c.t_x = c.t_y = t;
        } else {
            detail::get_if(p, "t_x_k", c.t_x, "init");
            detail::get_if(p, "t_y_k", c.t_y, "init");
        }
    }
    if (j.contains("sweep")) {
        const auto& p = j.at("sweep");
        detail::require_keys(p, "sweep", {"t_d_start_s", "t_d_stop_s", "t_d_step_s"});
        detail::get_if(p, "t_d_start_s", c.t_d_start, "sweep");
        detail::get_if(p, "t_d_stop_s", c.t_d_stop, "sweep");
        detail::get_if(p, "t_d_step_s", c.t_d_step, "sweep");
    }
    detail::get_if(j, "n_shots", c.n_shots, "$");
    detail::get_if(j, "base_seed", c.base_seed, "$");
    detail::get_if(j, "threads", c.threads, "$");
    if (j.contains("protocol")) {
        const auto& p = j.at("protocol");
        detail::require_keys(p, "protocol",
                             {"t_pre_s", "t_post_s", "trigger_jitter_s", "fixed_delay_s",
                              "escape_radius_m"});
        detail::get_if(p, "t_pre_s", c.t_pre, "protocol");
        detail::get_if(p, "t_post_s", c.t_post, "protocol");
        detail::get_if(p, "trigger_jitter_s", c.trigger_jitter, "protocol");
        detail::get_if(p, "fixed_delay_s", c.fixed_delay, "protocol");
        detail::get_if(p, "escape_radius_m", c.escape_radius, "protocol");
    }
    if (j.contains("pipeline")) {
        const auto& p = j.at("pipeline");
        detail::require_keys(p, "pipeline",
                             {"bandwidth_hz", "discard_s", "noise_var_m2", "bootstrap_n",
                              "f_offtone_hz", "mode", "estimate_frequency"});
        detail::get_if(p, "bandwidth_hz", c.bandwidth_hz, "pipeline");
        detail::get_if(p, "discard_s", c.discard, "pipeline");
        detail::get_if(p, "noise_var_m2", c.noise_var, "pipeline");
        detail::get_if(p, "bootstrap_n", c.bootstrap_n, "pipeline");
        detail::get_if(p, "f_offtone_hz", c.f_offtone_hz, "pipeline");
        detail::get_if(p, "mode", c.pipeline_mode, "pipeline");
        detail::get_if(p, "estimate_frequency", c.estimate_frequency, "pipeline");
        if (c.pipeline_mode != "retrodict" && c.pipeline_mode != "true_state")
            throw ConfigError("pipeline.mode must be 'retrodict' or 'true_state'");
    }
    if (j.contains("models")) {
        const auto& p = j.at("models");
        detail::require_keys(p, "models", {"simple", "full", "montecarlo"});
        detail::get_if(p, "simple", c.model_simple, "models");
        detail::get_if(p, "full", c.model_full, "models");
        detail::get_if(p, "montecarlo", c.model_montecarlo, "models");
    }
    if (j.contains("floquet")) {
        const auto& p = j.at("floquet");
        detail::require_keys(p, "floquet", {"n_max"});
        detail::get_if(p, "n_max", c.n_max, "floquet");
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error in ") + path + ": " + e.what());
    }
    return parse_config(j);
}

inline nlohmann::ordered_json serialize_config(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["particle"] = {{"diameter_m", c.diameter},
                     {"density_kg_m3", c.density},
                     {"n_charges", c.n_charges},
                     {"t_bath_k", c.t_bath},
                     {"gamma_heat_rad_s", c.gamma_heat}};
    if (c.gamma >= 0.0) j["particle"]["gamma_rad_s"] = c.gamma;
    j["optical"] = {{"omega_x_rad_s", c.omega_x}, {"omega_y_rad_s", c.omega_y}};
    j["paul"] = {{"omega_rf_rad_s", c.omega_rf},
                 {"a_u", c.a_u},
                 {"q_u", c.q_u},
                 {"a_v", std::isnan(c.a_v) ? c.a_u : c.a_v},
                 {"q_v", std::isnan(c.q_v) ? -c.q_u : c.q_v},
                 {"rf_phase0_rad", c.rf_phase0}};
    j["init"] = {{"t_x_k", c.t_x}, {"t_y_k", c.t_y}};
    j["sweep"] = {{"t_d_start_s", c.t_d_start},
                  {"t_d_stop_s", c.t_d_stop},
                  {"t_d_step_s", c.t_d_step}};
    j["n_shots"] = c.n_shots;
    j["base_seed"] = c.base_seed;
    j["threads"] = c.threads;
    j["protocol"] = {{"t_pre_s", c.t_pre},
                     {"t_post_s", c.t_post},
                     {"trigger_jitter_s", c.trigger_jitter},
                     {"fixed_delay_s", c.fixed_delay},
                     {"escape_radius_m", c.escape_radius}};
    j["pipeline"] = {{"bandwidth_hz", c.bandwidth_hz},
                     {"discard_s", c.discard},
                     {"noise_var_m2", c.noise_var},
                     {"bootstrap_n", c.bootstrap_n},
                     {"f_offtone_hz", c.f_offtone_hz},
                     {"mode", c.pipeline_mode},
                     {"estimate_frequency", c.estimate_frequency}};
    j["models"] = {{"simple", c.model_simple},
                   {"full", c.model_full},
                   {"montecarlo", c.model_montecarlo}};
    j["floquet"] = {{"n_max", c.n_max}};
    return j;
}

// FNV-1a over the canonical serialization; stamped into output headers.
// The thread count is an execution detail, not part of the experiment
// identity, so it is excluded: outputs are byte-identical across thread
// counts and must hash identically too.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
    nlohmann::ordered_json j = serialize_config(c);
    j.erase("threads");
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace fjump
