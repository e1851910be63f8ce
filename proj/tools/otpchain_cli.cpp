#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "otpchain/scenario.hpp"

namespace {

otpchain::ScenarioConfig load(const std::string& path, const std::optional<std::uint64_t>& seed)
{
    otpchain::ScenarioConfig cfg = otpchain::load_scenario(path);
    if (seed) cfg.rng_seed = *seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Run OTP registry authentication scenarios and print cost reports"};
    app.require_subcommand(1);

    std::string file;
    std::optional<std::uint64_t> seed;
    bool json = false;
    app.add_option("--seed", seed, "Override the scenario's rng_seed");
    app.add_flag("--json", json, "Machine-readable output");
    app.fallthrough();

    auto* run = app.add_subcommand("run", "Execute a scenario and print its transcript");
    run->add_option("scenario", file, "Scenario file")->required()->check(CLI::ExistingFile);
    auto* report = app.add_subcommand("report", "Print gas, throughput and storage figures");
    report->add_option("scenario", file, "Scenario file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        const otpchain::ScenarioConfig cfg = load(file, seed);
        if (*report) {
            const otpchain::CostReport r = otpchain::emit_cost_report(cfg);
            std::cout << (json ? otpchain::cost_report_json(r) : otpchain::cost_report_text(r));
            return 0;
        }
        const otpchain::ScenarioResult result = otpchain::run_scenario(cfg);
        std::cout << (json ? otpchain::scenario_json(result) : otpchain::scenario_text(result));
        return result.exit_status;
    } catch (const otpchain::ScenarioParseError& e) {
        std::fprintf(stderr, "%s: %s\n", file.c_str(), e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
