#ifndef QKDSIM_SCENARIO_HPP
#define QKDSIM_SCENARIO_HPP

#include "qkdsim/intensity_opt.hpp"
#include "qkdsim/mdi_rate.hpp"
#include "qkdsim/orbit.hpp"
#include "qkdsim/turbulence.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace qkdsim {

inline constexpr const char* TOOL_VERSION = "0.1.0";

struct Scenario {
    OrbitElements elements;
    Propagator propagator = Propagator::TwoBody;
    std::vector<GroundStation> stations;
    ChannelParams channel;
    std::vector<ChannelParams> channel_per_station; // resolved, one per station
    TurbulenceProfile turbulence;
    ProtocolParams protocol;
    AccessSearch search;

    bool optimize = false;
    double slot_seconds = 10.0;
    bool finite_size = false;
    IntensitySetting fixed_intensities;

    double availability_factor = 1.0;
    std::uint64_t seed = 1;

    nlohmann::json resolved;                   // full configuration after defaults
    std::vector<std::string> defaults_applied; // audit trail for the metadata file
    std::string slant_mode_choice;             // "literal"/"zenith_r0" (+ " (calibrated)")
};

Scenario load_scenario(const std::string& path);
Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir);

// Executes one CLI command against a scenario; writes CSV outputs and
// run_meta.json into out_dir. Returns the process exit code. A positive
// slot_seconds_override replaces the scenario's slot length for optimize.
int run_command(const std::string& command, const Scenario& sc, const std::string& out_dir,
                double slot_seconds_override = -1.0);

// Sweep harness: one row per grid point in lexicographic axis order.
int run_sweep(const nlohmann::json& sweep_spec, const nlohmann::json& scenario_json,
              const std::string& base_dir, const std::string& out_dir);

} // namespace qkdsim

#endif
