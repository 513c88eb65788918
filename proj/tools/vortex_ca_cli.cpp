#include <CLI11.hpp>

#include <iostream>

#include <vortex_ca/vortex_ca.hpp>

int main(int argc, char** argv) {
    using namespace vortex_ca;

    CLI::App app{"Vortex potential-field collision avoidance simulator"};
    app.require_subcommand(1);

    std::string scenario, out_dir, spec, dir, regime;

    auto* run = app.add_subcommand("run", "Simulate a scenario file or preset:<name>");
    run->add_option("scenario", scenario, "Scenario path or preset:<name>")->required();
    run->add_option("-o,--out", out_dir, "Output directory")->required();

    auto* sweep = app.add_subcommand("sweep", "Run the cartesian product of a sweep spec");
    sweep->add_option("spec", spec, "Sweep spec path")->required();
    sweep->add_option("-o,--out", out_dir, "Output directory")->required();

    auto* analyze = app.add_subcommand("analyze", "Verify a run directory against a regime");
    analyze->add_option("dir", dir, "Run directory")->required();
    analyze->add_option("--regime", regime, "AttractiveOnly, CoopPair, CoopVsNonCoop, CoopVsAttacker, NonVortexPair, MultiRobot")
        ->required();

    auto* plot = app.add_subcommand("plotdata", "Emit XY, Vr-Vth and separation tables for a run directory");
    plot->add_option("dir", dir, "Run directory")->required();

    CurlGrid grid;
    PFParams curl_params;
    double vx = -0.34, vy = 0.0;
    auto* curl = app.add_subcommand("curl", "Numerical curl of the vortex field over relative position");
    curl->add_option("-o,--out", out_dir, "Output directory")->required();
    curl->add_option("--lambda", curl_params.lambda, "Repulsive gain")->capture_default_str();
    curl->add_option("--vx", vx, "Relative velocity x (m/s)")->capture_default_str();
    curl->add_option("--vy", vy, "Relative velocity y (m/s)")->capture_default_str();
    curl->add_option("--x-min", grid.x_min)->capture_default_str();
    curl->add_option("--x-max", grid.x_max)->capture_default_str();
    curl->add_option("--y-min", grid.y_min)->capture_default_str();
    curl->add_option("--y-max", grid.y_max)->capture_default_str();
    curl->add_option("--nx", grid.nx)->capture_default_str();
    curl->add_option("--ny", grid.ny)->capture_default_str();
    curl->add_option("--r-min", grid.r_min, "Omit points closer than this")->capture_default_str();
    curl->add_option("--r-max", grid.r_max, "Omit points farther than this");

    std::string preset_name;
    bool list = false;
    auto* pre = app.add_subcommand("preset", "Print a bundled preset as scenario JSON");
    pre->add_option("name", preset_name, "Preset name");
    pre->add_flag("--list", list, "List preset names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitError;
    }

    if (*run) return cmd_run(scenario, out_dir);
    if (*sweep) return cmd_sweep(spec, out_dir);
    if (*analyze) return cmd_analyze(dir, regime);
    if (*plot) return cmd_plotdata(dir);
    if (*curl) return cmd_curl(grid, {vx, vy}, curl_params, out_dir);
    if (*pre) {
        try {
            if (list || preset_name.empty()) {
                for (const auto& n : preset_names()) std::cout << n << "\n";
                return kExitOk;
            }
            std::cout << write_scenario(preset(preset_name));
            return kExitOk;
        } catch (const std::exception& e) {
            std::cerr << e.what() << "\n";
            return kExitError;
        }
    }
    return kExitError;
}
