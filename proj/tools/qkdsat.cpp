// Command-line front end: scenario-driven satellite MDI-QKD analyses.
#include "qkdsim/errors.hpp"
#include "qkdsim/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Satellite MDI-QKD feasibility toolkit"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = ".", sweep_path;
    double slot_seconds = -1.0;

    const char* names[] = {"access", "linkbudget", "keyrate", "doppler", "optimize", "validate"};
    const char* descs[] = {"access windows over the ground stations",
                           "per-sample dual-uplink loss series",
                           "decoy-state MDI key-rate series over the first window",
                           "Doppler shifts and arrival-time offsets",
                           "slotted intensity optimization over the first window",
                           "built-in reference checks against published values"};
    for (int i = 0; i < 6; ++i) {
        CLI::App* sub = app.add_subcommand(names[i], descs[i]);
        sub->add_option("--scenario", scenario_path, "scenario JSON file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--sweep", sweep_path, "sweep spec JSON; runs the sweep harness");
        if (std::string(names[i]) == "optimize")
            sub->add_option("--slot-seconds", slot_seconds, "override the slot length");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1; // usage problems are exit 1
    }

    const std::string command = app.get_subcommands().front()->get_name();

    try {
        if (!sweep_path.empty()) {
            std::ifstream sf(sweep_path);
            if (!sf) {
                std::fprintf(stderr, "configuration error: cannot open sweep file: %s\n",
                             sweep_path.c_str());
                return 2;
            }
            nlohmann::json sweep_spec = nlohmann::json::parse(sf);
            std::ifstream cf(scenario_path);
            if (!cf) {
                std::fprintf(stderr, "configuration error: cannot open scenario file: %s\n",
                             scenario_path.c_str());
                return 2;
            }
            nlohmann::json scenario_json = nlohmann::json::parse(cf);
            std::string base = std::filesystem::path(scenario_path).parent_path().string();
            return qkdsim::run_sweep(sweep_spec, scenario_json, base, out_dir);
        }
        qkdsim::Scenario sc = qkdsim::load_scenario(scenario_path);
        return qkdsim::run_command(command, sc, out_dir, slot_seconds);
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const qkdsim::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const qkdsim::Error& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    }
}
