#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "otpchain/identity.hpp"
#include "otpchain/ledger.hpp"
#include "otpchain/otp.hpp"
#include "otpchain/transcript.hpp"

namespace otpchain {

// ---------------------------------------------------------------------------
// Messages
//
// Every signed message signs a domain-separated, length-prefixed body; the
// tag differs per message type so that no signature transfers between types.
// ---------------------------------------------------------------------------

/// Bootstrap step 8: credential plus Merkle root, signed with the user key.
struct RegistrationMessage {
    std::string account;
    VerifiableCredential credential;
    Digest merkle_root;
    std::uint64_t capacity = 0;
    Signature signature;

    Bytes signing_body() const;
};

/// Bootstrap step 11.
struct RegistrationAck {
    std::string account;
    Digest merkle_root;
};

/// Operational step 1.
struct AuthRequest1 {
    std::string account;
    std::uint64_t index = 0;
    OtpValue otp;
    MerkleProof proof;
    Signature signature;

    Bytes signing_body() const;
};

/// Operational step 8: the provider hands the published transaction back.
struct TxNotice {
    std::string account;
    OtpValue otp;
    LedgerTx tx;
};

/// Operational step 12.
struct AuthRequest2 {
    std::string account;
    LedgerTx tx;
    InclusionProof inclusion;
    OtpValue precursor;
    Signature signature;

    Bytes signing_body() const;
};

struct MisuseEvidence {
    Digest tx_id;
    EventKind event = EventKind::otp_inserted;
    std::uint64_t block_height = 0;
    OtpValue otp;
    /// Wallet index of the OTP when known to the party reporting it.
    std::optional<std::uint64_t> index;
};

/// Operational step 4 / step 6 alert, pushed to the user.
struct MisuseAlert {
    std::string account;
    std::uint64_t index = 0;
    int step = 0;
    std::optional<MisuseEvidence> evidence;
};

/// Operational step 17.
struct AccessGranted {
    std::string account;
    std::uint64_t index = 0;
};

/// Account recovery: new key and root, signed by the registered key.
struct RekeyRequest {
    std::string account;
    PublicKey new_public_key;
    Digest new_root;
    std::uint64_t capacity = 0;
    Signature old_key_signature;

    Bytes signing_body() const;
};

using Message = std::variant<RegistrationMessage, RegistrationAck, AuthRequest1, TxNotice, AuthRequest2, MisuseAlert,
                             AccessGranted, RekeyRequest>;

Bytes encode_message(const Message& m);
Digest message_digest(const Message& m);
std::string_view message_name(const Message& m);

// ---------------------------------------------------------------------------
// Authenticated channel
// ---------------------------------------------------------------------------

enum class Endpoint : std::uint8_t { client, provider };

/// What a network observer sees of one record: no plaintext, only direction,
/// size and an opaque tag.
struct SealedRecord {
    std::uint64_t channel_id = 0;
    std::uint64_t seq = 0;
    Endpoint from = Endpoint::client;
    std::size_t length = 0;
    Digest ciphertext_tag;
};

/// In-memory stand-in for a TLS session whose endpoints were verified up
/// front. Delivery is in order; plaintext is visible to endpoints only.
class SecureChannel {
public:
    SecureChannel(std::string client_id, std::string provider_id, DeterministicRng& rng);

    const std::string& client_id() const { return client_id_; }
    const std::string& provider_id() const { return provider_id_; }

    /// Records and delivers a message; returns what the peer receives.
    const Message& send(Endpoint from, Message m);
    /// Observer view of the whole transcript.
    std::vector<SealedRecord> observe() const;
    /// Re-injects a captured record. The receiving endpoint gets the recorded
    /// message again; the replay is itself appended to the transcript.
    const Message& replay(const SealedRecord& record);

    std::size_t size() const { return records_.size(); }
    const Message& message(std::size_t i) const { return records_.at(i).message; }
    Endpoint sender(std::size_t i) const { return records_.at(i).from; }

private:
    struct Record {
        Endpoint from;
        Message message;
        Bytes encoded;
    };

    std::uint64_t id_;
    std::string client_id_;
    std::string provider_id_;
    std::array<std::uint8_t, 32> session_key_{};
    std::vector<Record> records_;
};

// ---------------------------------------------------------------------------
// Outcomes
// ---------------------------------------------------------------------------

enum class OutcomeKind : std::uint8_t { granted, aborted_misuse, aborted_invalid, exhaustion, abandoned };
std::string_view to_string(OutcomeKind k);

struct ProtocolOutcome {
    OutcomeKind kind = OutcomeKind::aborted_invalid;
    /// 17 when granted; otherwise the operational step whose check failed.
    int step = 0;
    std::uint64_t index = 0;
    std::optional<MisuseEvidence> evidence;
    std::string reason;

    bool granted() const { return kind == OutcomeKind::granted; }
};

class BootstrapRejected : public Error {
public:
    BootstrapRejected(int step, const std::string& what) : Error(what), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

// ---------------------------------------------------------------------------
// Service provider
// ---------------------------------------------------------------------------

enum class SessionPhase : std::uint8_t { idle, initiated, invalidated };
std::string_view to_string(SessionPhase p);

struct ProviderUserRecord {
    std::string account;
    Did did;
    PublicKey user_public_key;
    Digest merkle_root;
    std::uint64_t capacity = 0;
    /// Bumped by every (re)registration; session counters restart per epoch.
    std::uint64_t epoch = 0;

    std::optional<OtpValue> last_submitted_otp;
    std::optional<Digest> last_submitted_tx;

    /// Last fully authenticated index.
    std::uint64_t session_id = 0;
    SessionPhase phase = SessionPhase::idle;
    /// Index of the initiated or invalidated session.
    std::uint64_t session_index = 0;

    OtpValue pending_otp;
    std::optional<Digest> pending_tx;
    std::uint64_t initiated_at_height = 0;
};

/// Operational step 5 output: what the provider asks its contract to do.
struct InsertRequest {
    ContractAddress contract;
    OtpValue new_otp;
    std::optional<OtpValue> prev_otp;
};

class ServiceProvider {
public:
    static constexpr std::uint64_t kDefaultAbandonAfterBlocks = 10;

    ServiceProvider(std::string name, std::uint64_t abandon_after_blocks = kDefaultAbandonAfterBlocks);

    const std::string& name() const { return name_; }
    std::uint64_t abandon_after_blocks() const { return abandon_after_blocks_; }

    /// Submits the registry deployment. The contract exists once the
    /// transaction is sealed.
    LedgerTx deploy(Ledger& ledger);
    const ContractAddress& contract() const;

    void trust_issuer(const Did& issuer, const PublicKey& pk);

    /// Bootstrap steps 9-10. Throws BootstrapRejected; an existing record for
    /// the account is replaced but keeps its last submitted OTP.
    void register_user(const RegistrationMessage& msg, const std::set<Digest>& issuer_revocations);
    /// Recovery without the identity provider. Throws Error and leaves the
    /// record untouched if the old-key signature does not verify.
    void apply_rekey(const RekeyRequest& req);

    /// Steps 2-4. nullopt means the session is now initiated.
    std::optional<ProtocolOutcome> on_request1(const AuthRequest1& req, const Ledger& ledger);
    /// Step 5.
    InsertRequest publication(const std::string& account) const;
    void on_submitted(const std::string& account, const Digest& tx_id);
    /// Steps 6-7, once the transaction is sealed. nullopt on success.
    std::optional<ProtocolOutcome> on_tx_included(const std::string& account, const Ledger& ledger);
    /// Step 8.
    TxNotice tx_notice(const std::string& account, const Ledger& ledger) const;
    /// Steps 13-17.
    ProtocolOutcome on_request2(const AuthRequest2& req, const Ledger& ledger);

    /// Drops an initiated session. A published OTP stays burned.
    void abandon(const std::string& account);
    /// Abandons every session initiated at least abandon_after_blocks ago.
    std::size_t abandon_stale_sessions(const Ledger& ledger);

    bool has_record(const std::string& account) const { return records_.count(account) != 0; }
    const ProviderUserRecord& record(const std::string& account) const;
    std::size_t user_count() const { return records_.size(); }
    const std::vector<MisuseAlert>& alerts() const { return alerts_; }

private:
    ProviderUserRecord& mutable_record(const std::string& account);
    ProtocolOutcome reject(ProviderUserRecord& rec, std::uint64_t index, int step, std::string reason);
    ProtocolOutcome misuse(ProviderUserRecord& rec, std::uint64_t index, int step, MisuseEvidence evidence,
                           std::string reason);

    std::string name_;
    std::uint64_t abandon_after_blocks_;
    std::optional<ContractAddress> contract_;
    std::map<Did, PublicKey> trusted_issuers_;
    std::map<std::string, ProviderUserRecord> records_;
    std::map<std::string, std::set<Digest>> roots_seen_;
    std::vector<MisuseAlert> alerts_;
};

// ---------------------------------------------------------------------------
// Ledger access from the provider
// ---------------------------------------------------------------------------

/// Path between the provider and the ledger. The default forwards
/// immediately; the delay adversary holds transactions back.
class LedgerLink {
public:
    virtual ~LedgerLink() = default;
    /// Returns a ticket for the forwarded call.
    virtual std::uint64_t forward(Ledger& ledger, const InsertRequest& req) = 0;
    /// Called before each seal.
    virtual void pump(Ledger&) {}
    /// Transaction id once the call has reached the ledger.
    virtual std::optional<Digest> resolve(std::uint64_t ticket) const = 0;
    /// Forget a ticket whose session was abandoned.
    virtual void cancel(std::uint64_t) {}
};

class DirectLink final : public LedgerLink {
public:
    std::uint64_t forward(Ledger& ledger, const InsertRequest& req) override;
    std::optional<Digest> resolve(std::uint64_t ticket) const override;

private:
    std::vector<Digest> submitted_;
};

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

struct ProtocolContext {
    Ledger& ledger;
    DidRegistry& dids;
    DeterministicRng& rng;
    Transcript& transcript;
};

/// Everything a user holds: the client interface (wallet), the
/// authenticator device, and the channel to the provider.
struct UserDevices {
    std::string account;
    std::optional<ClientWallet> wallet;
    std::optional<Authenticator> authenticator;
    std::unique_ptr<SecureChannel> channel;
    std::vector<MisuseAlert> inbox;
};

struct BootstrapOptions {
    Claims claims;
    std::string did_scheme = "sim:idchain";
    /// Applied to the seed words between authenticator and client.
    std::function<void(Mnemonic&)> seed_transfer;
    /// Applied to the credential before the client sends it.
    std::function<void(VerifiableCredential&)> credential_tamper;
    std::string phase = "bootstrap";
};

/// Runs bootstrap steps 1-11. Throws BootstrapRejected (step 9 or 10) or
/// MnemonicError (step 4); in both cases no record is created and the user's
/// devices are left as they were.
ProviderUserRecord run_bootstrap(ProtocolContext& ctx, UserDevices& user, IdentityProvider& idp,
                                 ServiceProvider& provider, std::uint64_t n, const BootstrapOptions& options = {});

/// Hooks that remove one factor from an otherwise honest run.
struct AuthFaults {
    /// Sign both requests with this key instead of the wallet key.
    std::optional<SecretKey> signing_key;
    std::function<void(AuthRequest1&)> request1;
    std::function<void(OtpValue&)> precursor;
};

struct AuthOptions {
    AuthFaults faults;
    /// Defaults to a DirectLink.
    LedgerLink* link = nullptr;
    std::string phase = "auth";
};

/// State after steps 1-9.
struct SessionStart {
    std::uint64_t run = 0;
    std::optional<ProtocolOutcome> failure;
    /// Highest step completed; see AttackOutcome for the convention.
    int steps_reached = 0;
    std::uint64_t index = 0;
    OtpValue otp;
    std::optional<LedgerTx> tx;
    std::optional<InclusionProof> inclusion;
    std::uint64_t seals = 0;
};

/// Client-side material used for steps 1-9. An adversary with a copied
/// wallet drives the same code.
SessionStart begin_authentication(ProtocolContext& ctx, const ClientWallet& wallet, SecureChannel& channel,
                                  ServiceProvider& provider, const AuthOptions& options = {});

/// Steps 10-17.
ProtocolOutcome complete_authentication(ProtocolContext& ctx, const SessionStart& start, const ClientWallet& wallet,
                                        const Authenticator& authenticator, SecureChannel& channel,
                                        ServiceProvider& provider, const AuthFaults& faults = {});

/// Provider side of steps 2-8 for a request that arrived on `channel`.
/// Seals blocks until the transaction lands or the session is abandoned.
SessionStart serve_request1(ProtocolContext& ctx, std::uint64_t run, const AuthRequest1& req, SecureChannel& channel,
                            ServiceProvider& provider, LedgerLink& link);
/// Provider side of steps 13-17.
ProtocolOutcome serve_request2(ProtocolContext& ctx, std::uint64_t run, const AuthRequest2& req,
                               SecureChannel& channel, ServiceProvider& provider);

/// Steps 1-17 for an honest user. The wallet counter advances only on grant.
ProtocolOutcome run_authentication(ProtocolContext& ctx, UserDevices& user, ServiceProvider& provider,
                                   const AuthOptions& options = {});

/// User-side check of the registry and event stream: evidence that an OTP the
/// wallet has not yet spent was published by someone.
std::optional<MisuseEvidence> check_misuse(const ClientWallet& wallet, const Ledger& ledger,
                                           const ContractAddress& contract);

enum class ReinitMode : std::uint8_t { fresh_identity, rekey_signed_by_old };

/// Fresh seed, keypair and tree. fresh_identity repeats the bootstrap;
/// rekey_signed_by_old skips the identity provider and authorises the new key
/// with a signature from the old one. Returns the id of the transcript run.
std::uint64_t reinitialize(ProtocolContext& ctx, UserDevices& user, IdentityProvider& idp, ServiceProvider& provider,
                           ReinitMode mode, std::uint64_t n);

/// A complete single-provider deployment: ledger, identity layer, provider
/// with its deployed registry, and any number of users.
class World {
public:
    struct Config {
        std::uint64_t rng_seed = 1;
        ChainProfile profile = ChainProfile::mainnet_like();
        std::uint64_t n_otps = kDefaultOtpCount;
        std::uint64_t abandon_after_blocks = ServiceProvider::kDefaultAbandonAfterBlocks;
    };

    explicit World(Config config);
    World(const World&) = delete;
    World& operator=(const World&) = delete;

    ProtocolContext& ctx() { return ctx_; }
    Ledger& ledger() { return ledger_; }
    DidRegistry& dids() { return dids_; }
    DeterministicRng& rng() { return rng_; }
    Transcript& transcript() { return transcript_; }
    IdentityProvider& identity_provider() { return *idp_; }
    ServiceProvider& provider() { return provider_; }
    const Config& config() const { return config_; }

    UserDevices& user(const std::string& account);
    bool has_user(const std::string& account) const { return users_.count(account) != 0; }

    ProviderUserRecord bootstrap(const std::string& account, const BootstrapOptions& options = {});
    ProtocolOutcome authenticate(const std::string& account, const AuthOptions& options = {});
    std::uint64_t reinitialize(const std::string& account, ReinitMode mode);
    std::optional<MisuseEvidence> check_misuse(const std::string& account);

private:
    Config config_;
    DeterministicRng rng_;
    Ledger ledger_;
    DidRegistry dids_;
    Transcript transcript_;
    ProtocolContext ctx_;
    std::unique_ptr<IdentityProvider> idp_;
    ServiceProvider provider_;
    std::map<std::string, UserDevices> users_;
};

}  // namespace otpchain
