#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "heraldsim/acceptance.hpp"
#include "heraldsim/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"heralded atom-photon link simulator"};
    app.require_subcommand(1);

    std::string scenario_list;
    for (const std::string& name : heraldsim::scenario_names()) {
        if (!scenario_list.empty()) scenario_list += ", ";
        scenario_list += name;
    }

    auto* run = app.add_subcommand("run", "run one scenario and write its CSV outputs");
    std::string scenario;
    std::uint64_t seed = 1;
    std::int64_t trials = 0;
    std::vector<std::string> overrides;
    std::string out_dir;
    int threads = 0;
    run->add_option("scenario", scenario, "one of: " + scenario_list)->required();
    run->add_option("--seed", seed, "master RNG seed (default 1)");
    run->add_option("--trials", trials, "per-point sample budget (0 = scenario default)");
    run->add_option("--set", overrides, "override a config key as key=value (repeatable)");
    run->add_option("--out", out_dir, "output directory (default $HERALDSIM_OUT, else ./out)");
    run->add_option("--threads", threads, "worker threads (0 = hardware concurrency)");

    auto* check = app.add_subcommand(
        "check", "run the acceptance suite; exit 0 iff every criterion passes");
    std::uint64_t check_seed = 20260822;
    check->add_option("--seed", check_seed, "master RNG seed for the suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            heraldsim::ScenarioConfig sc;
            sc.scenario = scenario;
            sc.seed = seed;
            sc.trials = trials;
            sc.overrides = overrides;
            sc.output_dir = out_dir;
            sc.threads = threads;
            const heraldsim::ScenarioResult result = heraldsim::run_scenario(sc);
            for (const heraldsim::SummaryLine& line : result.summary)
                std::cout << (line.pass ? "[PASS] " : "[FAIL] ") << line.label << ": "
                          << line.detail << "\n";
            std::cout << "wrote:\n";
            for (const auto& file : result.files)
                std::cout << "  " << file.string() << "\n";
            return 0;
        }
        return heraldsim::print_acceptance(std::cout,
                                           heraldsim::run_acceptance(check_seed));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
