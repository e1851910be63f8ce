#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "otpchain/crypto.hpp"

namespace otpchain {

enum class Actor : std::uint8_t { user, client, authenticator, identity_provider, service_provider, ledger, adversary };
std::string_view to_string(Actor a);

/// One numbered protocol step. `step` follows the bootstrap (1-11) or
/// operational (1-17) numbering of the run it belongs to; 0 marks
/// bookkeeping entries that are not protocol steps.
struct TranscriptEntry {
    std::uint64_t seq = 0;
    std::uint64_t run = 0;
    std::string phase;
    std::string account;
    int step = 0;
    Actor actor = Actor::client;
    std::optional<Digest> message_digest;
    std::string outcome;
};

/// Ordered log of everything the actors did in a simulation.
class Transcript {
public:
    /// Starts a new run (one bootstrap, authentication, reinit or attack) and
    /// returns its id.
    std::uint64_t begin_run(std::string phase, std::string account);

    void record(std::uint64_t run, int step, Actor actor, std::optional<Digest> message_digest, std::string outcome);

    /// Id of the most recently started run, 0 if none.
    std::uint64_t last_run() const { return runs_.size(); }
    std::size_t run_count() const { return runs_.size(); }

    const std::vector<TranscriptEntry>& entries() const { return entries_; }
    std::vector<TranscriptEntry> run_entries(std::uint64_t run) const;
    std::size_t count(std::uint64_t run, Actor actor) const;

    /// "#0007 r3 auth[alice] 05 service_provider 1a2b3c4d published" lines.
    std::string to_text() const;

private:
    struct RunInfo {
        std::string phase;
        std::string account;
    };

    std::vector<RunInfo> runs_;
    std::vector<TranscriptEntry> entries_;
};

}  // namespace otpchain
