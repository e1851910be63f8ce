#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "otpchain/protocol.hpp"

namespace otpchain {

enum class ChannelPosition : std::uint8_t { none, observe, delay };
std::string_view to_string(ChannelPosition p);

/// What the adversary holds. Client secrets are the signing key, the OTPs and
/// the tree; the authenticator is the seed.
struct AdversaryCapability {
    bool has_client_secrets = false;
    bool has_authenticator = false;
    ChannelPosition channel_position = ChannelPosition::none;

    std::string label() const;
    bool operator==(const AdversaryCapability&) const = default;
};

/// Every combination except full compromise (client secrets and seed).
std::vector<AdversaryCapability> enumerate_capabilities();

struct AttackOutcome {
    std::string name;
    std::uint64_t run = 0;
    bool authenticated = false;
    bool detected = false;
    std::optional<MisuseEvidence> evidence;
    /// Highest operational step the provider accepted. A request rejected at
    /// step 2 leaves this at 0: no adversary message was ever accepted.
    int steps_reached = 0;
};

/// Copies the victim's wallet and drives steps 1-9 with it. Without the
/// authenticator the adversary cannot build request 2, so it stops there.
AttackOutcome attack_stolen_client_secrets(ProtocolContext& ctx, const std::string& account,
                                           const ClientWallet& victim_wallet_copy, ServiceProvider& provider);

/// Derives OTPs and tree from a copied seed and signs with a key of its own.
AttackOutcome attack_stolen_authenticator(ProtocolContext& ctx, const std::string& account, const Seed& seed_copy,
                                          std::uint64_t n, ServiceProvider& provider);

struct ReplayAttempt {
    std::uint64_t seq = 0;
    std::string message;
    ProtocolOutcome outcome;
};

struct ReplayReport {
    AttackOutcome outcome;
    std::vector<ReplayAttempt> attempts;
};

/// Re-injects every client-to-provider record seen on `channel`, verbatim.
/// The adversary sees only sealed records and cannot alter them.
ReplayReport attack_replay_eavesdropper(ProtocolContext& ctx, SecureChannel& channel, ServiceProvider& provider);

/// Holds every transaction the provider forwards for `delay_blocks` seal
/// cycles before releasing it to the ledger.
class DelayLink final : public LedgerLink {
public:
    explicit DelayLink(std::uint64_t delay_blocks) : delay_(delay_blocks) {}

    std::uint64_t forward(Ledger& ledger, const InsertRequest& req) override;
    void pump(Ledger& ledger) override;
    std::optional<Digest> resolve(std::uint64_t ticket) const override;
    void cancel(std::uint64_t ticket) override;

    std::size_t held() const;

private:
    struct Held {
        InsertRequest request;
        std::uint64_t release_at = 0;
        std::optional<Digest> tx_id;
        bool cancelled = false;
    };

    std::uint64_t delay_;
    std::uint64_t pumps_ = 0;
    std::vector<Held> tickets_;
};

struct DelayReport {
    AttackOutcome outcome;
    ProtocolOutcome victim;
    /// Blocks sealed beyond the single one an undelayed run needs.
    std::uint64_t extra_seals = 0;
};

/// Runs one honest authentication for `user` with a delaying adversary
/// between provider and ledger.
DelayReport attack_ledger_delay(ProtocolContext& ctx, UserDevices& user, ServiceProvider& provider,
                                std::uint64_t delay_blocks);

/// Runs every attack the capability allows against `victim` in `world` and
/// merges the results. The victim must be bootstrapped.
AttackOutcome run_capability(World& world, const std::string& victim, const AdversaryCapability& cap);

/// Malware on the client takes over the user's freshly revealed precursor.
/// Not a security property: the demo shows the attacker's session being
/// granted and the user's own session being dropped.
struct MitmaDemo {
    ProtocolOutcome attacker;
    ProtocolOutcome victim;
    std::vector<std::string> narrative;
};
MitmaDemo mitma_demo(World& world, const std::string& victim);

}  // namespace otpchain
