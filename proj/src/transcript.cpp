#include "otpchain/transcript.hpp"

#include <cstdio>

namespace otpchain {

std::string_view to_string(Actor a)
{
    switch (a) {
    case Actor::user: return "user";
    case Actor::client: return "client";
    case Actor::authenticator: return "authenticator";
    case Actor::identity_provider: return "identity_provider";
    case Actor::service_provider: return "service_provider";
    case Actor::ledger: return "ledger";
    case Actor::adversary: return "adversary";
    }
    return "unknown";
}

std::uint64_t Transcript::begin_run(std::string phase, std::string account)
{
    runs_.push_back({std::move(phase), std::move(account)});
    return runs_.size();
}

void Transcript::record(std::uint64_t run, int step, Actor actor, std::optional<Digest> message_digest, std::string outcome)
{
    if (run == 0 || run > runs_.size()) throw Error("transcript run " + std::to_string(run) + " was never started");
    const RunInfo& info = runs_[run - 1];
    entries_.push_back({entries_.size() + 1, run, info.phase, info.account, step, actor, message_digest, std::move(outcome)});
}

std::vector<TranscriptEntry> Transcript::run_entries(std::uint64_t run) const
{
    std::vector<TranscriptEntry> out;
    for (const auto& e : entries_) {
        if (e.run == run) out.push_back(e);
    }
    return out;
}

std::size_t Transcript::count(std::uint64_t run, Actor actor) const
{
    std::size_t n = 0;
    for (const auto& e : entries_) n += (e.run == run && e.actor == actor);
    return n;
}

std::string Transcript::to_text() const
{
    std::string out;
    char buf[64];
    for (const auto& e : entries_) {
        std::snprintf(buf, sizeof buf, "#%04llu r%llu ", static_cast<unsigned long long>(e.seq),
                      static_cast<unsigned long long>(e.run));
        out += buf;
        out += e.phase + "[" + e.account + "] ";
        std::snprintf(buf, sizeof buf, "%02d ", e.step);
        out += buf;
        out += std::string(to_string(e.actor));
        out += ' ';
        out += e.message_digest ? to_hex(e.message_digest->view()).substr(0, 16) : std::string(16, '-');
        out += ' ';
        out += e.outcome;
        out += '\n';
    }
    return out;
}

}  // namespace otpchain
