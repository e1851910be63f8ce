#include "otpchain/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "otpchain/attack.hpp"

namespace otpchain {

namespace {

using nlohmann::ordered_json;

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_words(std::string_view s)
{
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

std::optional<std::uint64_t> parse_u64(std::string_view s)
{
    std::string digits;
    for (char c : s) {
        if (c != '_') digits += c;
    }
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc{} || p != digits.data() + digits.size() || digits.empty()) return std::nullopt;
    return v;
}

std::uint64_t require_u64(std::size_t line, std::string_view key, std::string_view value)
{
    auto v = parse_u64(value);
    if (!v) throw ScenarioParseError(line, std::string(key) + " expects an unsigned integer, got '" + std::string(value) + "'");
    return *v;
}

std::optional<OutcomeKind> outcome_kind(std::string_view s)
{
    for (auto k : {OutcomeKind::granted, OutcomeKind::aborted_misuse, OutcomeKind::aborted_invalid,
                   OutcomeKind::exhaustion, OutcomeKind::abandoned}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

std::optional<ReinitMode> reinit_mode(std::string_view s)
{
    if (s == "fresh_identity") return ReinitMode::fresh_identity;
    if (s == "rekey" || s == "rekey_signed_by_old") return ReinitMode::rekey_signed_by_old;
    return std::nullopt;
}

const std::set<std::string, std::less<>> kAttackKinds = {"stolen-client", "stolen-authenticator", "replay",
                                                          "ledger-delay", "blind"};

void validate_action(const ScenarioAction& a, const std::set<std::string, std::less<>>& users)
{
    auto fail = [&](const std::string& what) { throw ScenarioParseError(a.line, what); };

    if (a.verb == "seal") {
        if (!a.user.empty() && !parse_u64(a.user)) fail("seal takes an optional block count");
        if (!a.args.empty()) fail("seal takes at most one argument");
        return;
    }
    if (a.user.empty()) fail(a.verb + " needs a user");
    if (users.count(a.user) == 0) fail("undeclared user '" + a.user + "'");

    if (a.verb == "bootstrap") {
        if (!a.args.empty()) fail("bootstrap takes only a user");
    } else if (a.verb == "auth") {
        if (a.args.empty()) return;
        if (a.args.size() != 2 || a.args[0] != "expect" || !outcome_kind(a.args[1])) {
            fail("expected 'auth <user> [expect <granted|aborted_misuse|aborted_invalid|exhaustion|abandoned>]'");
        }
    } else if (a.verb == "reinit") {
        if (a.args.size() != 1 || !reinit_mode(a.args[0])) fail("expected 'reinit <user> <fresh_identity|rekey>'");
    } else if (a.verb == "check") {
        if (a.args.empty()) return;
        if (a.args.size() != 2 || a.args[0] != "expect" || (a.args[1] != "evidence" && a.args[1] != "clean")) {
            fail("expected 'check <user> [expect <evidence|clean>]'");
        }
    } else if (a.verb.starts_with("attack:")) {
        const std::string kind = a.verb.substr(7);
        if (kAttackKinds.count(kind) == 0) fail("unknown attack '" + kind + "'");
        if (kind == "ledger-delay") {
            if (a.args.size() != 1 || !parse_u64(a.args[0])) fail("expected 'attack:ledger-delay <user> <blocks>'");
        } else if (!a.args.empty()) {
            fail(a.verb + " takes only a user");
        }
    } else if (a.verb == "demo:mitma") {
        if (!a.args.empty()) fail("demo:mitma takes only a user");
    } else {
        fail("unknown action '" + a.verb + "'");
    }
}

std::string short_hex(const Digest& d)
{
    return to_hex(d.view()).substr(0, 16);
}

std::string describe(const ProtocolOutcome& o)
{
    std::string s(to_string(o.kind));
    if (o.granted()) return s + " (session " + std::to_string(o.index) + ")";
    s += " at step " + std::to_string(o.step);
    if (o.evidence) s += ", evidence tx " + to_hex(o.evidence->tx_id.view());
    return s;
}

std::string describe(const AttackOutcome& o)
{
    std::string s = "authenticated=" + std::string(o.authenticated ? "true" : "false") +
                    " detected=" + (o.detected ? "true" : "false") + " steps_reached=" + std::to_string(o.steps_reached);
    if (o.evidence) {
        s += " evidence tx " + to_hex(o.evidence->tx_id.view()) + " at height " +
             std::to_string(o.evidence->block_height);
    }
    return s;
}

ActionResult execute(World& world, const ScenarioAction& a)
{
    ActionResult r{a.line, a.text(), false, ""};
    Ledger& ledger = world.ledger();

    if (a.verb == "seal") {
        const std::uint64_t n = a.user.empty() ? 1 : *parse_u64(a.user);
        for (std::uint64_t i = 0; i < n; ++i) ledger.seal_block();
        world.provider().abandon_stale_sessions(ledger);
        r.passed = true;
        r.detail = "height " + std::to_string(ledger.height());
        return r;
    }
    if (a.verb == "bootstrap") {
        const ProviderUserRecord rec = world.bootstrap(a.user);
        r.passed = true;
        r.detail = "registered root " + short_hex(rec.merkle_root) + " (epoch " + std::to_string(rec.epoch) + ")";
        return r;
    }

    UserDevices& user = world.user(a.user);
    if (!user.wallet) {
        r.detail = a.user + " has not bootstrapped";
        return r;
    }

    if (a.verb == "auth") {
        const OutcomeKind expected = a.args.empty() ? OutcomeKind::granted : *outcome_kind(a.args[1]);
        const ProtocolOutcome o = world.authenticate(a.user);
        r.passed = o.kind == expected;
        r.detail = describe(o);
    } else if (a.verb == "reinit") {
        world.reinitialize(a.user, *reinit_mode(a.args[0]));
        const auto& rec = world.provider().record(a.user);
        r.passed = true;
        r.detail = "new root " + short_hex(rec.merkle_root) + " (epoch " + std::to_string(rec.epoch) + ")";
    } else if (a.verb == "check") {
        const auto ev = world.check_misuse(a.user);
        r.passed = a.args.empty() || (a.args[1] == "evidence") == ev.has_value();
        r.detail = ev ? "evidence tx " + to_hex(ev->tx_id.view()) + " for index " + std::to_string(ev->index.value_or(0))
                      : "clean";
    } else if (a.verb == "attack:stolen-client") {
        const std::uint64_t before = ledger.height();
        const AttackOutcome o = attack_stolen_client_secrets(world.ctx(), a.user, *user.wallet, world.provider());
        r.passed = !o.authenticated && o.detected && o.evidence && o.evidence->block_height == before + 1;
        r.detail = describe(o);
    } else if (a.verb == "attack:stolen-authenticator" || a.verb == "attack:blind") {
        const auto events_before = ledger.events().size();
        const Seed seed = a.verb == "attack:blind" ? Seed::generate(world.rng()) : user.authenticator->seed();
        const AttackOutcome o =
            attack_stolen_authenticator(world.ctx(), a.user, seed, user.wallet->capacity(), world.provider());
        r.passed = !o.authenticated && !o.detected && o.steps_reached == 0 && ledger.events().size() == events_before;
        r.detail = describe(o);
    } else if (a.verb == "attack:replay") {
        const ReplayReport rep = attack_replay_eavesdropper(world.ctx(), *user.channel, world.provider());
        r.passed = !rep.outcome.authenticated;
        r.detail = describe(rep.outcome) + "; " + std::to_string(rep.attempts.size()) + " records replayed";
        for (const auto& at : rep.attempts) r.detail += "; " + at.message + " -> " + describe(at.outcome);
    } else if (a.verb == "attack:ledger-delay") {
        const std::uint64_t k = *parse_u64(a.args[0]);
        const DelayReport rep = attack_ledger_delay(world.ctx(), user, world.provider(), k);
        const bool in_time = k + 1 <= world.provider().abandon_after_blocks();
        const OutcomeKind expected = in_time ? OutcomeKind::granted : OutcomeKind::abandoned;
        r.passed = !rep.outcome.detected && rep.victim.kind == expected;
        r.detail = "victim " + describe(rep.victim) + ", " + std::to_string(rep.extra_seals) + " extra seals, " +
                   (rep.outcome.detected ? "misuse reported" : "no misuse reported");
    } else if (a.verb == "demo:mitma") {
        const MitmaDemo demo = mitma_demo(world, a.user);
        r.passed = true;
        for (const auto& line : demo.narrative) r.detail += (r.detail.empty() ? "" : "; ") + line;
    }
    return r;
}

ordered_json entry_json(const TranscriptEntry& e)
{
    ordered_json j;
    j["seq"] = e.seq;
    j["run"] = e.run;
    j["phase"] = e.phase;
    j["account"] = e.account;
    j["step"] = e.step;
    j["actor"] = std::string(to_string(e.actor));
    j["digest"] = e.message_digest ? ordered_json(to_hex(e.message_digest->view())) : ordered_json(nullptr);
    j["outcome"] = e.outcome;
    return j;
}

ordered_json report_json(const CostReport& r)
{
    ordered_json j;
    j["deploy_gas"] = r.deploy_gas;
    j["auth_gas"] = r.auth_gas;
    j["throughput"] = ordered_json::array();
    for (const auto& t : r.throughput) {
        j["throughput"].push_back({{"profile", t.profile},
                                   {"block_gas_limit", t.block_gas_limit},
                                   {"block_interval_seconds", t.block_interval_seconds},
                                   {"max_auth_per_second", t.max_auth_per_second}});
    }
    j["storage"] = {{"users", r.storage_users}, {"otp_width", r.otp_width}, {"state_bytes", r.state_bytes}};
    return j;
}

}  // namespace

std::string ScenarioAction::text() const
{
    std::string s = verb;
    if (!user.empty()) s += " " + user;
    for (const auto& a : args) s += " " + a;
    return s;
}

ScenarioConfig parse_scenario(std::string_view text, std::string name)
{
    ScenarioConfig cfg;
    cfg.name = std::move(name);
    bool header_seen = false;
    bool in_schedule = false;
    std::set<std::string, std::less<>> keys_seen;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (auto hash_at = raw.find('#'); hash_at != std::string_view::npos) raw = raw.substr(0, hash_at);
        const std::string_view line = trim(raw);
        if (line.empty()) continue;

        if (!header_seen) {
            const auto words = split_words(line);
            if (words.size() != 2 || words[0] != "otpchain-scenario") {
                throw ScenarioParseError(line_no, "expected header 'otpchain-scenario v1'");
            }
            if (words[1] != "v1") throw ScenarioParseError(line_no, "unsupported scenario version '" + words[1] + "'");
            header_seen = true;
            continue;
        }
        if (line == "[schedule]") {
            if (in_schedule) throw ScenarioParseError(line_no, "duplicate [schedule] section");
            in_schedule = true;
            continue;
        }
        if (line.front() == '[') throw ScenarioParseError(line_no, "unknown section " + std::string(line));

        if (!in_schedule) {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw ScenarioParseError(line_no, "expected 'key = value'");
            const std::string key(trim(line.substr(0, eq)));
            const std::string_view value = trim(line.substr(eq + 1));
            if (value.empty()) throw ScenarioParseError(line_no, "missing value for " + key);
            if (!keys_seen.insert(key).second) throw ScenarioParseError(line_no, "duplicate key " + key);

            if (key == "name") {
                cfg.name = std::string(value);
            } else if (key == "rng_seed") {
                cfg.rng_seed = require_u64(line_no, key, value);
            } else if (key == "n_otps") {
                cfg.n_otps = require_u64(line_no, key, value);
                if (cfg.n_otps < 2 || !is_power_of_two(cfg.n_otps)) {
                    throw ScenarioParseError(line_no, "n_otps must be a power of two >= 2");
                }
            } else if (key == "users") {
                if (auto count = parse_u64(value)) {
                    for (std::uint64_t i = 1; i <= *count; ++i) cfg.users.push_back("user" + std::to_string(i));
                } else {
                    std::string list(value);
                    std::replace(list.begin(), list.end(), ',', ' ');
                    cfg.users = split_words(list);
                }
                std::set<std::string> unique(cfg.users.begin(), cfg.users.end());
                if (unique.size() != cfg.users.size()) throw ScenarioParseError(line_no, "duplicate user name");
            } else if (key == "chain_profile") {
                try {
                    cfg.chain_profile = ChainProfile::by_name(value).name;
                } catch (const Error& e) {
                    throw ScenarioParseError(line_no, e.what());
                }
            } else if (key == "abandon_after_blocks") {
                cfg.abandon_after_blocks = require_u64(line_no, key, value);
                if (cfg.abandon_after_blocks == 0) throw ScenarioParseError(line_no, "abandon_after_blocks must be >= 1");
            } else if (key == "storage_users") {
                cfg.storage_users = require_u64(line_no, key, value);
            } else {
                throw ScenarioParseError(line_no, "unknown key " + key);
            }
            continue;
        }

        auto words = split_words(line);
        ScenarioAction a;
        a.line = line_no;
        a.verb = words[0];
        if (words.size() > 1) a.user = words[1];
        if (words.size() > 2) a.args.assign(words.begin() + 2, words.end());
        cfg.schedule.push_back(std::move(a));
    }

    if (!header_seen) throw ScenarioParseError(line_no == 0 ? 1 : line_no, "empty scenario file");
    const std::set<std::string, std::less<>> users(cfg.users.begin(), cfg.users.end());
    for (const auto& a : cfg.schedule) validate_action(a, users);
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open scenario " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.stem().string());
}

CostReport emit_cost_report(const ScenarioConfig& config)
{
    CostReport r;
    r.deploy_gas = kDeployGas;
    r.auth_gas = kInsertOtpGas;
    for (const auto& p : ChainProfile::builtin()) {
        r.throughput.push_back(
            {p.name, p.block_gas_limit, p.block_interval_seconds, max_auth_per_second(p, kInsertOtpGas)});
    }
    r.storage_users = config.storage_users;
    r.otp_width = OtpValue::size;
    r.state_bytes = state_storage_bytes(config.storage_users, OtpValue::size);
    return r;
}

std::string cost_report_text(const CostReport& r)
{
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-28s %12llu gas\n", "registry deployment", static_cast<unsigned long long>(r.deploy_gas));
    out += buf;
    std::snprintf(buf, sizeof buf, "%-28s %12llu gas\n\n", "authentication (insert_otp)",
                  static_cast<unsigned long long>(r.auth_gas));
    out += buf;
    std::snprintf(buf, sizeof buf, "%-18s %14s %10s %12s\n", "profile", "block gas", "interval", "auth/s");
    out += buf;
    for (const auto& t : r.throughput) {
        std::snprintf(buf, sizeof buf, "%-18s %14llu %9gs %12llu\n", t.profile.c_str(),
                      static_cast<unsigned long long>(t.block_gas_limit), t.block_interval_seconds,
                      static_cast<unsigned long long>(t.max_auth_per_second));
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "\nprovider state: %llu users x %llu B = %llu bytes\n",
                  static_cast<unsigned long long>(r.storage_users), static_cast<unsigned long long>(r.otp_width),
                  static_cast<unsigned long long>(r.state_bytes));
    out += buf;
    return out;
}

std::string cost_report_json(const CostReport& report)
{
    return report_json(report).dump(2) + "\n";
}

ScenarioResult run_scenario(const ScenarioConfig& config)
{
    World::Config wc;
    wc.rng_seed = config.rng_seed;
    wc.profile = ChainProfile::by_name(config.chain_profile);
    wc.n_otps = config.n_otps;
    wc.abandon_after_blocks = config.abandon_after_blocks;
    World world(wc);

    ScenarioResult result;
    result.config = config;
    for (const auto& action : config.schedule) {
        ActionResult r;
        try {
            r = execute(world, action);
        } catch (const std::exception& e) {
            r = {action.line, action.text(), false, std::string("error: ") + e.what()};
        }
        if (!r.passed) result.exit_status = 1;
        result.actions.push_back(std::move(r));
    }
    result.transcript = world.transcript();
    result.cost = emit_cost_report(config);
    result.final_height = world.ledger().height();
    result.registry_size = world.ledger().registry(world.provider().contract()).size();
    return result;
}

std::string scenario_text(const ScenarioResult& result)
{
    std::string out = "scenario " + result.config.name + " (seed " + std::to_string(result.config.rng_seed) +
                      ", n_otps " + std::to_string(result.config.n_otps) + ", " + result.config.chain_profile + ")\n\n";
    out += result.transcript.to_text();
    out += "\n";
    for (const auto& a : result.actions) {
        out += std::string(a.passed ? "[ok]   " : "[FAIL] ") + "line " + std::to_string(a.line) + ": " + a.action +
               " -> " + a.detail + "\n";
    }
    out += "\nheight " + std::to_string(result.final_height) + ", registry size " +
           std::to_string(result.registry_size) + ", exit " + std::to_string(result.exit_status) + "\n";
    return out;
}

std::string scenario_json(const ScenarioResult& result)
{
    const ScenarioConfig& c = result.config;
    ordered_json j;
    j["format"] = "otpchain-transcript";
    j["version"] = 1;
    j["scenario"] = {{"name", c.name},
                     {"rng_seed", c.rng_seed},
                     {"n_otps", c.n_otps},
                     {"users", c.users},
                     {"chain_profile", c.chain_profile},
                     {"abandon_after_blocks", c.abandon_after_blocks}};
    j["entries"] = ordered_json::array();
    for (const auto& e : result.transcript.entries()) j["entries"].push_back(entry_json(e));
    j["actions"] = ordered_json::array();
    for (const auto& a : result.actions) {
        j["actions"].push_back({{"line", a.line}, {"action", a.action}, {"passed", a.passed}, {"detail", a.detail}});
    }
    j["final_height"] = result.final_height;
    j["registry_size"] = result.registry_size;
    j["cost_report"] = report_json(result.cost);
    j["exit_status"] = result.exit_status;
    return j.dump(2) + "\n";
}

}  // namespace otpchain
