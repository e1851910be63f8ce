#include "otpchain/protocol.hpp"

#include <unordered_map>

namespace otpchain {

namespace {

void write_proof(ByteWriter& w, const MerkleProof& p)
{
    w.u64(p.leaf_index).u32(static_cast<std::uint32_t>(p.siblings.size()));
    for (const auto& s : p.siblings) w.raw(s.sibling).u8(static_cast<std::uint8_t>(s.side));
}

void write_tx(ByteWriter& w, const LedgerTx& tx)
{
    w.raw(tx.tx_id).field(tx.canonical_payload()).u64(tx.nonce).u64(tx.gas_used).u8(static_cast<std::uint8_t>(tx.status));
    w.u64(tx.block_height.value_or(0)).u8(tx.block_height.has_value());
}

void write_inclusion(ByteWriter& w, const InclusionProof& p)
{
    w.u64(p.block_height);
    write_proof(w, p.merkle_proof);
}

void write_evidence(ByteWriter& w, const std::optional<MisuseEvidence>& e)
{
    if (!e) {
        w.u8(0);
        return;
    }
    w.u8(1).raw(e->tx_id).u8(static_cast<std::uint8_t>(e->event)).u64(e->block_height).raw(e->otp);
    w.u64(e->index.value_or(0));
}

/// Steps that passed before `failed_step`, for transcript bookkeeping.
int steps_completed(int failed_step)
{
    // Step 1 only counts once the provider has accepted the signed message.
    return failed_step <= 2 ? 0 : failed_step - 1;
}

Actor actor_for_step(int step)
{
    switch (step) {
    case 1: case 9: case 12: return Actor::client;
    case 6: return Actor::ledger;
    case 10: return Actor::authenticator;
    case 11: return Actor::user;
    default: return Actor::service_provider;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Messages
// ---------------------------------------------------------------------------

Bytes RegistrationMessage::signing_body() const
{
    return ByteWriter{}
        .field("otpchain/registration/v1")
        .field(account)
        .field(credential.export_bytes())
        .raw(merkle_root)
        .u64(capacity)
        .take();
}

Bytes AuthRequest1::signing_body() const
{
    ByteWriter w;
    w.field("otpchain/auth-request-1/v1").field(account).u64(index).raw(otp);
    write_proof(w, proof);
    return w.take();
}

Bytes AuthRequest2::signing_body() const
{
    ByteWriter w;
    w.field("otpchain/auth-request-2/v1").field(account);
    write_tx(w, tx);
    write_inclusion(w, inclusion);
    w.raw(precursor);
    return w.take();
}

Bytes RekeyRequest::signing_body() const
{
    return ByteWriter{}
        .field("otpchain/rekey/v1")
        .field(account)
        .raw(new_public_key)
        .raw(new_root)
        .u64(capacity)
        .take();
}

std::string_view message_name(const Message& m)
{
    static constexpr std::string_view kNames[] = {"registration", "registration_ack", "auth_request_1", "tx_notice",
                                                  "auth_request_2", "misuse_alert", "access_granted", "rekey_request"};
    return kNames[m.index()];
}

Bytes encode_message(const Message& m)
{
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(m.index()));
    std::visit(
        [&w](const auto& msg) {
            using T = std::decay_t<decltype(msg)>;
            if constexpr (std::is_same_v<T, RegistrationMessage> || std::is_same_v<T, AuthRequest1> ||
                          std::is_same_v<T, AuthRequest2> || std::is_same_v<T, RekeyRequest>) {
                w.field(msg.signing_body());
                if constexpr (std::is_same_v<T, RekeyRequest>) {
                    w.raw(msg.old_key_signature);
                } else {
                    w.raw(msg.signature);
                }
            } else if constexpr (std::is_same_v<T, RegistrationAck>) {
                w.field(msg.account).raw(msg.merkle_root);
            } else if constexpr (std::is_same_v<T, TxNotice>) {
                w.field(msg.account).raw(msg.otp);
                write_tx(w, msg.tx);
            } else if constexpr (std::is_same_v<T, MisuseAlert>) {
                w.field(msg.account).u64(msg.index).u32(static_cast<std::uint32_t>(msg.step));
                write_evidence(w, msg.evidence);
            } else if constexpr (std::is_same_v<T, AccessGranted>) {
                w.field(msg.account).u64(msg.index);
            }
        },
        m);
    return w.take();
}

Digest message_digest(const Message& m)
{
    return hash(encode_message(m));
}

// ---------------------------------------------------------------------------
// SecureChannel
// ---------------------------------------------------------------------------

SecureChannel::SecureChannel(std::string client_id, std::string provider_id, DeterministicRng& rng)
    : id_(rng.next_u64()), client_id_(std::move(client_id)), provider_id_(std::move(provider_id))
{
    rng.fill(session_key_);
}

const Message& SecureChannel::send(Endpoint from, Message m)
{
    Bytes plain = encode_message(m);
    records_.push_back({from, std::move(m), std::move(plain)});
    return records_.back().message;
}

std::vector<SealedRecord> SecureChannel::observe() const
{
    std::vector<SealedRecord> out;
    out.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const Record& r = records_[i];
        const Digest tag = hash(ByteWriter{}.raw(session_key_).u64(i).field(r.encoded).bytes());
        out.push_back({id_, i, r.from, r.encoded.size(), tag});
    }
    return out;
}

const Message& SecureChannel::replay(const SealedRecord& record)
{
    if (record.channel_id != id_ || record.seq >= records_.size()) {
        throw Error("record does not belong to this channel");
    }
    Record copy = records_[record.seq];
    records_.push_back(std::move(copy));
    return records_.back().message;
}

// ---------------------------------------------------------------------------
// Outcomes
// ---------------------------------------------------------------------------

std::string_view to_string(OutcomeKind k)
{
    switch (k) {
    case OutcomeKind::granted: return "granted";
    case OutcomeKind::aborted_misuse: return "aborted_misuse";
    case OutcomeKind::aborted_invalid: return "aborted_invalid";
    case OutcomeKind::exhaustion: return "exhaustion";
    case OutcomeKind::abandoned: return "abandoned";
    }
    return "unknown";
}

std::string_view to_string(SessionPhase p)
{
    switch (p) {
    case SessionPhase::idle: return "idle";
    case SessionPhase::initiated: return "initiated";
    case SessionPhase::invalidated: return "invalidated";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// ServiceProvider
// ---------------------------------------------------------------------------

ServiceProvider::ServiceProvider(std::string name, std::uint64_t abandon_after_blocks)
    : name_(std::move(name)), abandon_after_blocks_(abandon_after_blocks)
{
    if (abandon_after_blocks_ == 0) throw Error("abandonment threshold must be at least one block");
}

LedgerTx ServiceProvider::deploy(Ledger& ledger)
{
    if (contract_) throw Error("provider " + name_ + " already deployed its registry");
    auto [address, tx] = ledger.deploy_registry(name_);
    contract_ = address;
    return tx;
}

const ContractAddress& ServiceProvider::contract() const
{
    if (!contract_) throw Error("provider " + name_ + " has no registry");
    return *contract_;
}

void ServiceProvider::trust_issuer(const Did& issuer, const PublicKey& pk)
{
    trusted_issuers_[issuer] = pk;
}

void ServiceProvider::register_user(const RegistrationMessage& msg, const std::set<Digest>& issuer_revocations)
{
    const VerifiableCredential& vc = msg.credential;
    if (!verify(vc.user_public_key, msg.signing_body(), msg.signature)) {
        throw BootstrapRejected(9, "registration message is not signed by the credential's key");
    }
    auto issuer = trusted_issuers_.find(vc.issuer_did);
    if (issuer == trusted_issuers_.end()) {
        throw BootstrapRejected(9, "credential issuer " + vc.issuer_did.to_string() + " is not trusted");
    }
    if (!verify_credential(vc, issuer->second, issuer_revocations)) {
        throw BootstrapRejected(9, "credential failed verification");
    }
    if (msg.capacity < 2 || !is_power_of_two(msg.capacity)) {
        throw BootstrapRejected(10, "OTP capacity must be a power of two");
    }
    auto& seen = roots_seen_[msg.account];
    if (seen.count(msg.merkle_root) != 0) {
        throw BootstrapRejected(10, "Merkle root was already registered for " + msg.account);
    }

    ProviderUserRecord rec;
    auto existing = records_.find(msg.account);
    if (existing != records_.end()) {
        rec.last_submitted_otp = existing->second.last_submitted_otp;
        rec.last_submitted_tx = existing->second.last_submitted_tx;
        rec.epoch = existing->second.epoch;
    }
    rec.account = msg.account;
    rec.did = vc.did;
    rec.user_public_key = vc.user_public_key;
    rec.merkle_root = msg.merkle_root;
    rec.capacity = msg.capacity;
    rec.epoch += 1;
    seen.insert(msg.merkle_root);
    records_[msg.account] = std::move(rec);
}

void ServiceProvider::apply_rekey(const RekeyRequest& req)
{
    ProviderUserRecord& rec = mutable_record(req.account);
    if (!verify(rec.user_public_key, req.signing_body(), req.old_key_signature)) {
        throw Error("rekey request for " + req.account + " is not signed by the registered key");
    }
    if (req.capacity < 2 || !is_power_of_two(req.capacity)) throw Error("OTP capacity must be a power of two");
    auto& seen = roots_seen_[req.account];
    if (seen.count(req.new_root) != 0) throw Error("Merkle root was already registered for " + req.account);

    seen.insert(req.new_root);
    rec.user_public_key = req.new_public_key;
    rec.merkle_root = req.new_root;
    rec.capacity = req.capacity;
    rec.epoch += 1;
    rec.session_id = 0;
    rec.phase = SessionPhase::idle;
    rec.session_index = 0;
    rec.pending_tx.reset();
}

const ProviderUserRecord& ServiceProvider::record(const std::string& account) const
{
    auto it = records_.find(account);
    if (it == records_.end()) throw Error("no record for account " + account);
    return it->second;
}

ProviderUserRecord& ServiceProvider::mutable_record(const std::string& account)
{
    auto it = records_.find(account);
    if (it == records_.end()) throw Error("no record for account " + account);
    return it->second;
}

ProtocolOutcome ServiceProvider::reject(ProviderUserRecord& rec, std::uint64_t index, int step, std::string reason)
{
    if (step == 4) alerts_.push_back({rec.account, index, step, std::nullopt});
    return {OutcomeKind::aborted_invalid, step, index, std::nullopt, std::move(reason)};
}

ProtocolOutcome ServiceProvider::misuse(ProviderUserRecord& rec, std::uint64_t index, int step,
                                        MisuseEvidence evidence, std::string reason)
{
    alerts_.push_back({rec.account, index, step, evidence});
    return {OutcomeKind::aborted_misuse, step, index, std::move(evidence), std::move(reason)};
}

std::optional<ProtocolOutcome> ServiceProvider::on_request1(const AuthRequest1& req, const Ledger& ledger)
{
    auto it = records_.find(req.account);
    if (it == records_.end()) {
        return ProtocolOutcome{OutcomeKind::aborted_invalid, 2, req.index, std::nullopt, "unknown account"};
    }
    ProviderUserRecord& rec = it->second;

    if (!verify(rec.user_public_key, req.signing_body(), req.signature)) {
        return reject(rec, req.index, 2, "signature does not verify under the registered key");
    }
    if (req.proof.leaf_index + 1 != req.index || !verify_proof(rec.merkle_root, req.otp, req.proof, rec.capacity)) {
        return reject(rec, req.index, 3, "OTP is not a member of the registered tree");
    }
    const bool previous_closed = rec.phase != SessionPhase::initiated;
    if (!previous_closed || rec.session_id + 1 != req.index) {
        // Someone holding the key and OTPs is out of step with us. If the OTP
        // is already on chain, that publication is the evidence.
        if (auto ev = ledger.last_insertion(contract(), req.otp)) {
            return misuse(rec, req.index, 4, {ev->tx_id, ev->kind, ev->height, ev->otp, req.index},
                          "session " + std::to_string(req.index) + " was already used");
        }
        return reject(rec, req.index, 4, "session id mismatch");
    }

    rec.phase = SessionPhase::initiated;
    rec.session_index = req.index;
    rec.pending_otp = req.otp;
    rec.pending_tx.reset();
    rec.initiated_at_height = ledger.height();
    return std::nullopt;
}

InsertRequest ServiceProvider::publication(const std::string& account) const
{
    const ProviderUserRecord& rec = record(account);
    if (rec.phase != SessionPhase::initiated) throw Error("no initiated session for " + account);
    return {contract(), rec.pending_otp, rec.last_submitted_otp};
}

void ServiceProvider::on_submitted(const std::string& account, const Digest& tx_id)
{
    mutable_record(account).pending_tx = tx_id;
}

std::optional<ProtocolOutcome> ServiceProvider::on_tx_included(const std::string& account, const Ledger& ledger)
{
    ProviderUserRecord& rec = mutable_record(account);
    if (!rec.pending_tx) throw Error("no submitted transaction for " + account);
    const LedgerTx& tx = ledger.transaction(*rec.pending_tx);
    if (!tx.block_height) throw Error("transaction for " + account + " is not sealed");

    switch (tx.status) {
    case TxStatus::success:
        rec.last_submitted_otp = rec.pending_otp;
        rec.last_submitted_tx = tx.tx_id;
        return std::nullopt;
    case TxStatus::rejected_reuse:
        rec.phase = SessionPhase::idle;
        return misuse(rec, rec.session_index, 6,
                      {tx.tx_id, EventKind::misuse_attempt, *tx.block_height, rec.pending_otp, rec.session_index},
                      "registry reports reuse of the OTP");
    default:
        rec.phase = SessionPhase::idle;
        return reject(rec, rec.session_index, 6, "registry rejected the previous OTP");
    }
}

TxNotice ServiceProvider::tx_notice(const std::string& account, const Ledger& ledger) const
{
    const ProviderUserRecord& rec = record(account);
    if (!rec.pending_tx) throw Error("no submitted transaction for " + account);
    return {account, rec.pending_otp, ledger.transaction(*rec.pending_tx)};
}

ProtocolOutcome ServiceProvider::on_request2(const AuthRequest2& req, const Ledger& ledger)
{
    auto it = records_.find(req.account);
    if (it == records_.end()) return {OutcomeKind::aborted_invalid, 13, 0, std::nullopt, "unknown account"};
    ProviderUserRecord& rec = it->second;
    const std::uint64_t index = rec.session_index;

    if (!verify(rec.user_public_key, req.signing_body(), req.signature)) {
        return reject(rec, index, 13, "signature does not verify under the registered key");
    }
    if (rec.phase != SessionPhase::initiated || !rec.pending_tx || index != rec.session_id + 1) {
        return reject(rec, index, 14, "no initiated session to complete");
    }
    if (otp_from_precursor(req.precursor) != rec.pending_otp) {
        return reject(rec, index, 15, "precursor does not hash to the session OTP");
    }
    const LedgerTx* onchain = ledger.find_transaction(req.tx.tx_id);
    const auto* call = std::get_if<InsertOtp>(&req.tx.payload);
    const auto headers = ledger.headers();
    if (req.tx.tx_id != *rec.pending_tx || onchain == nullptr || onchain->status != TxStatus::success ||
        call == nullptr || call->new_otp != rec.pending_otp || !light_verify(headers, req.tx, req.inclusion)) {
        return reject(rec, index, 16, "transaction or inclusion proof does not match the session");
    }

    rec.session_id = index;
    rec.phase = SessionPhase::invalidated;
    rec.pending_tx.reset();
    return {OutcomeKind::granted, 17, index, std::nullopt, "access granted"};
}

void ServiceProvider::abandon(const std::string& account)
{
    ProviderUserRecord& rec = mutable_record(account);
    if (rec.phase != SessionPhase::initiated) return;
    rec.phase = SessionPhase::idle;
    rec.pending_tx.reset();
}

std::size_t ServiceProvider::abandon_stale_sessions(const Ledger& ledger)
{
    std::size_t n = 0;
    for (auto& [account, rec] : records_) {
        if (rec.phase == SessionPhase::initiated && ledger.height() >= rec.initiated_at_height + abandon_after_blocks_) {
            abandon(account);
            ++n;
        }
    }
    return n;
}

// ---------------------------------------------------------------------------
// DirectLink
// ---------------------------------------------------------------------------

std::uint64_t DirectLink::forward(Ledger& ledger, const InsertRequest& req)
{
    submitted_.push_back(ledger.submit_insert_otp(req.contract, req.new_otp, req.prev_otp).tx_id);
    return submitted_.size() - 1;
}

std::optional<Digest> DirectLink::resolve(std::uint64_t ticket) const
{
    if (ticket >= submitted_.size()) return std::nullopt;
    return submitted_[ticket];
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

ProviderUserRecord run_bootstrap(ProtocolContext& ctx, UserDevices& user, IdentityProvider& idp,
                                 ServiceProvider& provider, std::uint64_t n, const BootstrapOptions& options)
{
    auto& log = ctx.transcript;
    const std::uint64_t run = log.begin_run(options.phase, user.account);

    const KeyPair keypair = KeyPair::generate(ctx.rng);
    log.record(run, 1, Actor::client, hash(keypair.public_key.view()), "keypair generated");

    const Did did = ctx.dids.create_did(options.did_scheme);
    log.record(run, 2, Actor::user, hash(as_bytes(did.to_string())), "DID " + did.to_string() + " created");
    Claims claims = options.claims;
    VerifiableCredential credential = idp.issue_credential(ctx.dids, did, keypair.public_key, claims);
    log.record(run, 2, Actor::identity_provider, credential.digest(), "credential issued");
    if (options.credential_tamper) options.credential_tamper(credential);

    Authenticator authenticator(Seed::generate(ctx.rng), n);
    log.record(run, 3, Actor::authenticator, std::nullopt, "seed generated");

    Mnemonic words = authenticator.export_seed();
    if (options.seed_transfer) options.seed_transfer(words);
    log.record(run, 4, Actor::user, std::nullopt, "seed transcribed (" + std::to_string(words.words.size()) + " words)");

    std::optional<ClientWallet> wallet;
    try {
        wallet = ClientWallet::bootstrap(words, n, keypair);
    } catch (const MnemonicError& e) {
        log.record(run, 4, Actor::client, std::nullopt, std::string("aborted: ") + e.what());
        throw;
    }
    wallet->set_credential(credential);
    log.record(run, 5, Actor::client, wallet->root(), "OTPs and Merkle root derived");
    log.record(run, 6, Actor::client, std::nullopt, std::to_string(wallet->tree().nodes().size()) + " tree nodes stored");
    log.record(run, 7, Actor::client, std::nullopt, "seed and precursors deleted");

    if (!user.channel) user.channel = std::make_unique<SecureChannel>(user.account, provider.name(), ctx.rng);
    RegistrationMessage msg{user.account, credential, wallet->root(), n, {}};
    msg.signature = sign(keypair.secret_key, msg.signing_body());
    const Message& sent = user.channel->send(Endpoint::client, msg);
    log.record(run, 8, Actor::client, message_digest(sent), "registration sent");

    try {
        provider.register_user(msg, idp.revocations());
    } catch (const BootstrapRejected& e) {
        log.record(run, e.step(), Actor::service_provider, std::nullopt, std::string("rejected: ") + e.what());
        throw;
    }
    log.record(run, 9, Actor::service_provider, credential.digest(), "credential verified");
    log.record(run, 10, Actor::service_provider, wallet->root(), "record saved");

    const Message& ack = user.channel->send(Endpoint::provider, RegistrationAck{user.account, wallet->root()});
    log.record(run, 11, Actor::service_provider, message_digest(ack), "registration acknowledged");

    user.wallet = std::move(wallet);
    user.authenticator = std::move(authenticator);
    return provider.record(user.account);
}

// ---------------------------------------------------------------------------
// Operational phase
// ---------------------------------------------------------------------------

SessionStart serve_request1(ProtocolContext& ctx, std::uint64_t run, const AuthRequest1& req, SecureChannel& channel,
                            ServiceProvider& provider, LedgerLink& link)
{
    auto& log = ctx.transcript;
    Ledger& ledger = ctx.ledger;
    SessionStart start;
    start.run = run;
    start.index = req.index;
    start.otp = req.otp;

    if (auto failure = provider.on_request1(req, ledger)) {
        static constexpr const char* kPassed[] = {"signature ok", "Merkle membership ok"};
        for (int s = 2; s < failure->step && s < 4; ++s) {
            log.record(run, s, Actor::service_provider, std::nullopt, kPassed[s - 2]);
        }
        log.record(run, failure->step, Actor::service_provider, std::nullopt,
                   std::string(to_string(failure->kind)) + ": " + failure->reason);
        if (failure->step == 4) {
            MisuseAlert alert{req.account, req.index, 4, failure->evidence};
            const Message& m = channel.send(Endpoint::provider, alert);
            log.record(run, 4, Actor::service_provider, message_digest(m), "misuse alert sent");
        }
        start.steps_reached = steps_completed(failure->step);
        start.failure = std::move(failure);
        return start;
    }
    log.record(run, 2, Actor::service_provider, std::nullopt, "signature ok");
    log.record(run, 3, Actor::service_provider, std::nullopt, "Merkle membership ok");
    log.record(run, 4, Actor::service_provider, std::nullopt, "session " + std::to_string(req.index) + " initiated");

    const InsertRequest insert = provider.publication(req.account);
    const std::uint64_t ticket = link.forward(ledger, insert);
    log.record(run, 5, Actor::service_provider, std::nullopt,
               insert.prev_otp ? "insert_otp submitted with previous OTP" : "insert_otp submitted");

    std::optional<Digest> tx_id;
    for (std::uint64_t i = 0; i < provider.abandon_after_blocks(); ++i) {
        link.pump(ledger);
        ledger.seal_block();
        ++start.seals;
        tx_id = link.resolve(ticket);
        if (tx_id && ledger.transaction(*tx_id).block_height) break;
    }
    if (!tx_id || !ledger.transaction(*tx_id).block_height) {
        provider.abandon(req.account);
        link.cancel(ticket);
        log.record(run, 5, Actor::service_provider, std::nullopt,
                   "abandoned: transaction not included after " + std::to_string(start.seals) + " blocks");
        start.steps_reached = 4;
        start.failure = ProtocolOutcome{OutcomeKind::abandoned, 5, req.index, std::nullopt,
                                        "transaction not included in time"};
        return start;
    }
    provider.on_submitted(req.account, *tx_id);

    const LedgerTx& tx = ledger.transaction(*tx_id);
    log.record(run, 6, Actor::ledger, tx.tx_id,
               std::string(to_string(tx.status)) + " at height " + std::to_string(*tx.block_height));
    if (auto failure = provider.on_tx_included(req.account, ledger)) {
        const Message& m = channel.send(Endpoint::provider, MisuseAlert{req.account, req.index, 6, failure->evidence});
        log.record(run, 6, Actor::service_provider, message_digest(m),
                   std::string(to_string(failure->kind)) + ": " + failure->reason);
        start.steps_reached = steps_completed(failure->step);
        start.failure = std::move(failure);
        return start;
    }
    log.record(run, 7, Actor::service_provider, tx.tx_id, "last submitted OTP updated");

    const TxNotice notice = provider.tx_notice(req.account, ledger);
    const Message& m = channel.send(Endpoint::provider, notice);
    log.record(run, 8, Actor::service_provider, message_digest(m), "transaction returned to client");
    start.tx = notice.tx;
    start.steps_reached = 8;
    return start;
}

SessionStart begin_authentication(ProtocolContext& ctx, const ClientWallet& wallet, SecureChannel& channel,
                                  ServiceProvider& provider, const AuthOptions& options)
{
    auto& log = ctx.transcript;
    const std::string& account = channel.client_id();
    const std::uint64_t run = log.begin_run(options.phase, account);

    AuthMaterial material;
    try {
        material = wallet.next_auth_material();
    } catch (const OtpExhausted& e) {
        log.record(run, 1, Actor::client, std::nullopt, std::string("exhaustion: ") + e.what());
        SessionStart start;
        start.run = run;
        start.index = wallet.session_counter();
        start.failure = ProtocolOutcome{OutcomeKind::exhaustion, 1, wallet.session_counter(), std::nullopt, e.what()};
        return start;
    }

    AuthRequest1 req{account, material.index, material.otp, material.proof, {}};
    if (options.faults.request1) options.faults.request1(req);
    req.signature = sign(options.faults.signing_key.value_or(wallet.keypair().secret_key), req.signing_body());
    const Message& sent = channel.send(Endpoint::client, req);
    log.record(run, 1, Actor::client, message_digest(sent), "request 1 for index " + std::to_string(req.index));

    DirectLink direct;
    LedgerLink& link = options.link ? *options.link : direct;
    SessionStart start = serve_request1(ctx, run, req, channel, provider, link);
    if (start.failure) return start;

    // Step 9: the client checks the returned transaction against its own OTP
    // and verifies inclusion with a light client.
    const LedgerTx& tx = *start.tx;
    const auto* call = std::get_if<InsertOtp>(&tx.payload);
    LightClient light;
    bool ok = call != nullptr && call->new_otp == material.otp && tx.contract_address == provider.contract() &&
              light.sync(ctx.ledger.headers());
    if (ok) {
        start.inclusion = ctx.ledger.inclusion_proof(tx.tx_id);
        ok = light.verify(tx, *start.inclusion);
    }
    if (!ok) {
        log.record(run, 9, Actor::client, tx.tx_id, "aborted_invalid: returned transaction failed verification");
        start.failure = ProtocolOutcome{OutcomeKind::aborted_invalid, 9, material.index, std::nullopt,
                                        "returned transaction failed verification"};
        start.steps_reached = 8;
        return start;
    }
    log.record(run, 9, Actor::client, tx.tx_id, "inclusion verified by light client");
    start.steps_reached = 9;
    return start;
}

ProtocolOutcome serve_request2(ProtocolContext& ctx, std::uint64_t run, const AuthRequest2& req,
                               SecureChannel& channel, ServiceProvider& provider)
{
    auto& log = ctx.transcript;
    ProtocolOutcome outcome = provider.on_request2(req, ctx.ledger);
    const int last_ok = outcome.granted() ? 16 : outcome.step - 1;
    static constexpr const char* kPassed[] = {"signature ok", "session valid", "precursor ok", "inclusion ok"};
    for (int s = 13; s <= last_ok; ++s) log.record(run, s, actor_for_step(s), std::nullopt, kPassed[s - 13]);
    if (!outcome.granted()) {
        log.record(run, outcome.step, Actor::service_provider, std::nullopt,
                   std::string(to_string(outcome.kind)) + ": " + outcome.reason);
        return outcome;
    }
    const Message& m = channel.send(Endpoint::provider, AccessGranted{req.account, outcome.index});
    log.record(run, 17, Actor::service_provider, message_digest(m),
               "granted; session " + std::to_string(outcome.index) + " invalidated");
    return outcome;
}

ProtocolOutcome complete_authentication(ProtocolContext& ctx, const SessionStart& start, const ClientWallet& wallet,
                                        const Authenticator& authenticator, SecureChannel& channel,
                                        ServiceProvider& provider, const AuthFaults& faults)
{
    if (start.failure) return *start.failure;
    if (!start.tx || !start.inclusion) throw Error("session was not started");
    auto& log = ctx.transcript;
    const std::uint64_t run = start.run;

    PrecursorReveal reveal;
    try {
        reveal = authenticator.derive_precursor(start.index);
    } catch (const Error& e) {
        log.record(run, 10, Actor::authenticator, std::nullopt, std::string("aborted_invalid: ") + e.what());
        return {OutcomeKind::aborted_invalid, 10, start.index, std::nullopt, e.what()};
    }
    log.record(run, 10, Actor::authenticator, std::nullopt, "precursor displayed as mnemonic");

    OtpValue precursor = OtpValue::from(mnemonic_decode(reveal.encoding));
    if (faults.precursor) faults.precursor(precursor);
    log.record(run, 11, Actor::user, std::nullopt, "precursor transcribed");

    AuthRequest2 req{channel.client_id(), *start.tx, *start.inclusion, precursor, {}};
    req.signature = sign(faults.signing_key.value_or(wallet.keypair().secret_key), req.signing_body());
    const Message& sent = channel.send(Endpoint::client, req);
    log.record(run, 12, Actor::client, message_digest(sent), "request 2 sent");

    return serve_request2(ctx, run, req, channel, provider);
}

ProtocolOutcome run_authentication(ProtocolContext& ctx, UserDevices& user, ServiceProvider& provider,
                                   const AuthOptions& options)
{
    if (!user.wallet || !user.authenticator || !user.channel) {
        throw Error("user " + user.account + " has not bootstrapped");
    }
    const SessionStart start = begin_authentication(ctx, *user.wallet, *user.channel, provider, options);
    ProtocolOutcome outcome =
        complete_authentication(ctx, start, *user.wallet, *user.authenticator, *user.channel, provider, options.faults);
    if (outcome.granted()) user.wallet->confirm_success(outcome.index);
    if (outcome.kind == OutcomeKind::aborted_misuse || outcome.step == 4) {
        user.inbox.push_back({user.account, outcome.index, outcome.step, outcome.evidence});
    }
    return outcome;
}

std::optional<MisuseEvidence> check_misuse(const ClientWallet& wallet, const Ledger& ledger,
                                           const ContractAddress& contract)
{
    std::map<OtpValue, std::uint64_t> unspent;
    for (std::uint64_t i = wallet.session_counter(); i <= wallet.capacity(); ++i) unspent.emplace(wallet.otp(i), i);
    for (const auto& e : ledger.events_for(contract)) {
        if (e.kind != EventKind::otp_inserted && e.kind != EventKind::misuse_attempt) continue;
        auto it = unspent.find(e.otp);
        if (it != unspent.end()) return MisuseEvidence{e.tx_id, e.kind, e.height, e.otp, it->second};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Reinitialization
// ---------------------------------------------------------------------------

std::uint64_t reinitialize(ProtocolContext& ctx, UserDevices& user, IdentityProvider& idp, ServiceProvider& provider,
                           ReinitMode mode, std::uint64_t n)
{
    if (!provider.has_record(user.account)) throw Error("no registration to reinitialize for " + user.account);

    if (mode == ReinitMode::fresh_identity) {
        BootstrapOptions opts;
        opts.phase = "reinit:fresh_identity";
        run_bootstrap(ctx, user, idp, provider, n, opts);
        return ctx.transcript.last_run();
    }

    if (!user.wallet || !user.channel) throw Error("rekey needs the old client wallet");
    auto& log = ctx.transcript;
    const std::uint64_t run = log.begin_run("reinit:rekey", user.account);

    const KeyPair keypair = KeyPair::generate(ctx.rng);
    log.record(run, 1, Actor::client, hash(keypair.public_key.view()), "new keypair generated");
    Authenticator authenticator(Seed::generate(ctx.rng), n);
    log.record(run, 3, Actor::authenticator, std::nullopt, "new seed generated");
    const Mnemonic words = authenticator.export_seed();
    log.record(run, 4, Actor::user, std::nullopt, "seed transcribed (" + std::to_string(words.words.size()) + " words)");
    ClientWallet wallet = ClientWallet::bootstrap(words, n, keypair);
    log.record(run, 5, Actor::client, wallet.root(), "OTPs and Merkle root derived");
    log.record(run, 6, Actor::client, std::nullopt, std::to_string(wallet.tree().nodes().size()) + " tree nodes stored");
    log.record(run, 7, Actor::client, std::nullopt, "seed and precursors deleted");

    RekeyRequest req{user.account, keypair.public_key, wallet.root(), n, {}};
    req.old_key_signature = sign(user.wallet->keypair().secret_key, req.signing_body());
    const Message& sent = user.channel->send(Endpoint::client, req);
    log.record(run, 8, Actor::client, message_digest(sent), "rekey request signed by the old key");
    try {
        provider.apply_rekey(req);
    } catch (const Error& e) {
        log.record(run, 9, Actor::service_provider, std::nullopt, std::string("rejected: ") + e.what());
        throw;
    }
    log.record(run, 9, Actor::service_provider, std::nullopt, "old-key signature verified");
    log.record(run, 10, Actor::service_provider, wallet.root(), "record updated");
    const Message& ack = user.channel->send(Endpoint::provider, RegistrationAck{user.account, wallet.root()});
    log.record(run, 11, Actor::service_provider, message_digest(ack), "rekey acknowledged");

    user.wallet = std::move(wallet);
    user.authenticator = std::move(authenticator);
    return run;
}

// ---------------------------------------------------------------------------
// World
// ---------------------------------------------------------------------------

World::World(Config config)
    : config_(std::move(config)),
      rng_(config_.rng_seed),
      ledger_(config_.profile),
      ctx_{ledger_, dids_, rng_, transcript_},
      provider_("provider", config_.abandon_after_blocks)
{
    const Did idp_did = dids_.create_did("sim:idchain");
    idp_ = std::make_unique<IdentityProvider>(idp_did, KeyPair::generate(rng_));
    provider_.trust_issuer(idp_did, idp_->public_key());
    provider_.deploy(ledger_);
    ledger_.seal_block();
}

UserDevices& World::user(const std::string& account)
{
    auto [it, inserted] = users_.try_emplace(account);
    if (inserted) it->second.account = account;
    return it->second;
}

ProviderUserRecord World::bootstrap(const std::string& account, const BootstrapOptions& options)
{
    return run_bootstrap(ctx_, user(account), *idp_, provider_, config_.n_otps, options);
}

ProtocolOutcome World::authenticate(const std::string& account, const AuthOptions& options)
{
    return run_authentication(ctx_, user(account), provider_, options);
}

std::uint64_t World::reinitialize(const std::string& account, ReinitMode mode)
{
    return otpchain::reinitialize(ctx_, user(account), *idp_, provider_, mode, config_.n_otps);
}

std::optional<MisuseEvidence> World::check_misuse(const std::string& account)
{
    UserDevices& u = user(account);
    if (!u.wallet) throw Error("user " + account + " has no wallet");
    return otpchain::check_misuse(*u.wallet, ledger_, provider_.contract());
}

}  // namespace otpchain
