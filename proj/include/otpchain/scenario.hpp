#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "otpchain/bytes.hpp"
#include "otpchain/transcript.hpp"

namespace otpchain {

/// Thrown for malformed scenario files; line() is 1-based.
class ScenarioParseError : public Error {
public:
    ScenarioParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct ScenarioAction {
    std::size_t line = 0;
    /// bootstrap, auth, attack:<kind>, demo:<kind>, reinit, check, seal
    std::string verb;
    std::string user;
    std::vector<std::string> args;

    std::string text() const;
};

/// File format:
///
///     otpchain-scenario v1
///     rng_seed = 7
///     n_otps = 16
///     users = alice, bob          # or a count: users = 3 -> user1..user3
///     chain_profile = mainnet-like
///     [schedule]
///     bootstrap alice
///     auth alice
///     auth alice expect aborted_misuse
///     attack:stolen-client alice
///     reinit alice rekey
///     seal 2
struct ScenarioConfig {
    std::string name = "scenario";
    std::uint64_t rng_seed = 1;
    std::uint64_t n_otps = 16;
    std::vector<std::string> users;
    std::string chain_profile = "mainnet-like";
    std::uint64_t abandon_after_blocks = 10;
    std::uint64_t storage_users = 1'000'000;
    std::vector<ScenarioAction> schedule;
};

ScenarioConfig parse_scenario(std::string_view text, std::string name = "scenario");
ScenarioConfig load_scenario(const std::filesystem::path& path);

struct ProfileThroughput {
    std::string profile;
    std::uint64_t block_gas_limit = 0;
    double block_interval_seconds = 0;
    std::uint64_t max_auth_per_second = 0;
};

struct CostReport {
    std::uint64_t deploy_gas = 0;
    std::uint64_t auth_gas = 0;
    std::vector<ProfileThroughput> throughput;
    std::uint64_t storage_users = 0;
    std::uint64_t otp_width = 0;
    std::uint64_t state_bytes = 0;
};

CostReport emit_cost_report(const ScenarioConfig& config);
std::string cost_report_text(const CostReport& report);
std::string cost_report_json(const CostReport& report);

struct ActionResult {
    std::size_t line = 0;
    std::string action;
    bool passed = false;
    std::string detail;
};

struct ScenarioResult {
    ScenarioConfig config;
    Transcript transcript;
    std::vector<ActionResult> actions;
    CostReport cost;
    std::uint64_t final_height = 0;
    std::size_t registry_size = 0;
    /// 0 when every expectation held, 1 otherwise.
    int exit_status = 0;
};

ScenarioResult run_scenario(const ScenarioConfig& config);

/// Step-numbered transcript followed by one line per scheduled action.
std::string scenario_text(const ScenarioResult& result);
/// Stable, pretty-printed JSON; byte-identical for identical configs.
std::string scenario_json(const ScenarioResult& result);

}  // namespace otpchain
