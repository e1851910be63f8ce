#include "otpchain/attack.hpp"

namespace otpchain {

namespace {

int accepted_through(const ProtocolOutcome& o)
{
    if (o.granted()) return 17;
    if (o.kind == OutcomeKind::abandoned) return 4;
    return o.step <= 2 ? 0 : o.step - 1;
}

void merge(AttackOutcome& into, const AttackOutcome& part)
{
    into.authenticated = into.authenticated || part.authenticated;
    into.detected = into.detected || part.detected;
    if (!into.evidence) into.evidence = part.evidence;
    into.steps_reached = std::max(into.steps_reached, part.steps_reached);
    if (into.run == 0) into.run = part.run;
}

}  // namespace

std::string_view to_string(ChannelPosition p)
{
    switch (p) {
    case ChannelPosition::none: return "none";
    case ChannelPosition::observe: return "observe";
    case ChannelPosition::delay: return "delay";
    }
    return "unknown";
}

std::string AdversaryCapability::label() const
{
    std::string s = has_client_secrets ? "client" : "";
    if (has_authenticator) s += s.empty() ? "authenticator" : "+authenticator";
    if (s.empty()) s = "nothing";
    return s + "/" + std::string(to_string(channel_position));
}

std::vector<AdversaryCapability> enumerate_capabilities()
{
    std::vector<AdversaryCapability> out;
    for (bool client : {false, true}) {
        for (bool authenticator : {false, true}) {
            if (client && authenticator) continue;
            for (auto pos : {ChannelPosition::none, ChannelPosition::observe, ChannelPosition::delay}) {
                out.push_back({client, authenticator, pos});
            }
        }
    }
    return out;
}

AttackOutcome attack_stolen_client_secrets(ProtocolContext& ctx, const std::string& account,
                                           const ClientWallet& victim_wallet_copy, ServiceProvider& provider)
{
    const ClientWallet wallet = victim_wallet_copy;
    SecureChannel channel(account, provider.name(), ctx.rng);
    AuthOptions options;
    options.phase = "attack:stolen-client";

    const SessionStart start = begin_authentication(ctx, wallet, channel, provider, options);
    AttackOutcome out;
    out.name = "stolen-client";
    out.run = start.run;
    out.steps_reached = start.steps_reached;
    if (start.failure) {
        out.evidence = start.failure->evidence;
    } else {
        ctx.transcript.record(start.run, 10, Actor::adversary, std::nullopt,
                              "no authenticator: precursor unavailable, session left open");
    }
    if (auto ev = check_misuse(wallet, ctx.ledger, provider.contract())) out.evidence = ev;
    out.detected = out.evidence.has_value();
    return out;
}

AttackOutcome attack_stolen_authenticator(ProtocolContext& ctx, const std::string& account, const Seed& seed_copy,
                                          std::uint64_t n, ServiceProvider& provider)
{
    const KeyPair own_key = KeyPair::generate(ctx.rng);
    const ClientWallet wallet = ClientWallet::bootstrap(mnemonic_encode(seed_copy.view()), n, own_key);
    SecureChannel channel(account, provider.name(), ctx.rng);
    AuthOptions options;
    options.phase = "attack:stolen-authenticator";

    const SessionStart start = begin_authentication(ctx, wallet, channel, provider, options);
    AttackOutcome out;
    out.name = "stolen-authenticator";
    out.run = start.run;
    out.steps_reached = start.steps_reached;
    if (!start.failure) {
        // Would need the victim's key; unreachable unless signatures break.
        const Authenticator authenticator(seed_copy, n);
        const ProtocolOutcome o = complete_authentication(ctx, start, wallet, authenticator, channel, provider);
        out.authenticated = o.granted();
        out.steps_reached = accepted_through(o);
        out.evidence = o.evidence;
    } else {
        out.evidence = start.failure->evidence;
    }
    out.detected = out.evidence.has_value();
    return out;
}

ReplayReport attack_replay_eavesdropper(ProtocolContext& ctx, SecureChannel& channel, ServiceProvider& provider)
{
    ReplayReport report;
    report.outcome.name = "replay";
    const std::uint64_t run = ctx.transcript.begin_run("attack:replay", channel.client_id());
    report.outcome.run = run;

    std::vector<SealedRecord> captured;
    for (const auto& r : channel.observe()) {
        if (r.from == Endpoint::client) captured.push_back(r);
    }

    for (const auto& rec : captured) {
        const Message msg = channel.replay(rec);
        ctx.transcript.record(run, 0, Actor::adversary, message_digest(msg),
                              "replayed record " + std::to_string(rec.seq) + " (" + std::to_string(rec.length) +
                                  " bytes)");
        ProtocolOutcome outcome;
        if (const auto* r1 = std::get_if<AuthRequest1>(&msg)) {
            DirectLink link;
            const SessionStart start = serve_request1(ctx, run, *r1, channel, provider, link);
            outcome = start.failure ? *start.failure
                                    : ProtocolOutcome{OutcomeKind::aborted_invalid, 9, r1->index, std::nullopt,
                                                      "replayer cannot continue past the transaction notice"};
        } else if (const auto* r2 = std::get_if<AuthRequest2>(&msg)) {
            outcome = serve_request2(ctx, run, *r2, channel, provider);
        } else if (const auto* reg = std::get_if<RegistrationMessage>(&msg)) {
            try {
                provider.register_user(*reg, {});
                outcome = {OutcomeKind::granted, 17, 0, std::nullopt, "registration replay accepted"};
            } catch (const BootstrapRejected& e) {
                outcome = {OutcomeKind::aborted_invalid, e.step(), 0, std::nullopt, e.what()};
            }
            ctx.transcript.record(run, outcome.step, Actor::service_provider, std::nullopt, outcome.reason);
        } else if (const auto* rekey = std::get_if<RekeyRequest>(&msg)) {
            try {
                provider.apply_rekey(*rekey);
                outcome = {OutcomeKind::granted, 17, 0, std::nullopt, "rekey replay accepted"};
            } catch (const Error& e) {
                outcome = {OutcomeKind::aborted_invalid, 9, 0, std::nullopt, e.what()};
            }
            ctx.transcript.record(run, outcome.step, Actor::service_provider, std::nullopt, outcome.reason);
        } else {
            continue;
        }

        AttackOutcome part;
        part.name = "replay";
        part.run = run;
        part.authenticated = outcome.granted();
        part.detected = outcome.kind == OutcomeKind::aborted_misuse;
        part.evidence = outcome.evidence;
        part.steps_reached = accepted_through(outcome);
        merge(report.outcome, part);
        report.attempts.push_back({rec.seq, std::string(message_name(msg)), std::move(outcome)});
    }
    return report;
}

std::uint64_t DelayLink::forward(Ledger&, const InsertRequest& req)
{
    tickets_.push_back({req, pumps_ + delay_ + 1, std::nullopt, false});
    return tickets_.size() - 1;
}

void DelayLink::pump(Ledger& ledger)
{
    ++pumps_;
    for (auto& h : tickets_) {
        if (h.cancelled || h.tx_id || h.release_at > pumps_) continue;
        h.tx_id = ledger.submit_insert_otp(h.request.contract, h.request.new_otp, h.request.prev_otp).tx_id;
    }
}

std::optional<Digest> DelayLink::resolve(std::uint64_t ticket) const
{
    if (ticket >= tickets_.size()) return std::nullopt;
    return tickets_[ticket].tx_id;
}

void DelayLink::cancel(std::uint64_t ticket)
{
    if (ticket < tickets_.size()) tickets_[ticket].cancelled = true;
}

std::size_t DelayLink::held() const
{
    std::size_t n = 0;
    for (const auto& h : tickets_) n += (!h.cancelled && !h.tx_id);
    return n;
}

DelayReport attack_ledger_delay(ProtocolContext& ctx, UserDevices& user, ServiceProvider& provider,
                                std::uint64_t delay_blocks)
{
    DelayLink link(delay_blocks);
    AuthOptions options;
    options.link = &link;
    options.phase = "attack:ledger-delay";

    const std::uint64_t before = ctx.ledger.height();
    DelayReport report;
    report.victim = run_authentication(ctx, user, provider, options);
    const std::uint64_t seals = ctx.ledger.height() - before;
    report.extra_seals = seals > 0 ? seals - 1 : 0;

    report.outcome.name = "ledger-delay";
    report.outcome.run = ctx.transcript.last_run();
    report.outcome.evidence = check_misuse(*user.wallet, ctx.ledger, provider.contract());
    report.outcome.detected = report.outcome.evidence.has_value();
    return report;
}

AttackOutcome run_capability(World& world, const std::string& victim, const AdversaryCapability& cap)
{
    if (cap.has_client_secrets && cap.has_authenticator) {
        throw Error("full compromise is outside the adversary model");
    }
    UserDevices& user = world.user(victim);
    if (!user.wallet || !user.authenticator) throw Error("victim " + victim + " has not bootstrapped");

    AttackOutcome out;
    out.name = cap.label();
    auto& ctx = world.ctx();
    auto& provider = world.provider();

    // Channel attacks run first: they need the victim's honest traffic, which
    // a stolen-client session left open would disturb.
    if (cap.channel_position == ChannelPosition::delay) {
        merge(out, attack_ledger_delay(ctx, user, provider, 2).outcome);
    }
    if (cap.channel_position == ChannelPosition::observe) {
        world.authenticate(victim);
        merge(out, attack_replay_eavesdropper(ctx, *user.channel, provider).outcome);
    }
    if (cap.has_authenticator) {
        merge(out, attack_stolen_authenticator(ctx, victim, user.authenticator->seed(), user.wallet->capacity(),
                                               provider));
    }
    if (cap.has_client_secrets) {
        merge(out, attack_stolen_client_secrets(ctx, victim, *user.wallet, provider));
    }
    if (!cap.has_client_secrets && !cap.has_authenticator) {
        // Holds nothing of the victim's: a guessed seed and its own key.
        auto blind = attack_stolen_authenticator(ctx, victim, Seed::generate(world.rng()), user.wallet->capacity(),
                                                 provider);
        merge(out, blind);
    }
    return out;
}

MitmaDemo mitma_demo(World& world, const std::string& victim)
{
    UserDevices& user = world.user(victim);
    if (!user.wallet || !user.authenticator || !user.channel) throw Error("victim " + victim + " has not bootstrapped");
    auto& ctx = world.ctx();
    auto& provider = world.provider();
    MitmaDemo demo;

    AuthOptions options;
    options.phase = "demo:mitma";
    const SessionStart start = begin_authentication(ctx, *user.wallet, *user.channel, provider, options);
    if (start.failure) {
        demo.victim = demo.attacker = *start.failure;
        demo.narrative.push_back("user session failed before the precursor was requested");
        return demo;
    }
    demo.narrative.push_back("user completes steps 1-9 for session " + std::to_string(start.index));

    const PrecursorReveal reveal = user.authenticator->derive_precursor(start.index);
    const OtpValue precursor = OtpValue::from(mnemonic_decode(reveal.encoding));
    ctx.transcript.record(start.run, 11, Actor::adversary, std::nullopt, "malware captures the typed precursor");
    demo.narrative.push_back("user types the precursor into the infected client; malware captures it");

    SecureChannel own(victim, provider.name(), ctx.rng);
    AuthRequest2 stolen{victim, *start.tx, *start.inclusion, precursor, {}};
    stolen.signature = sign(user.wallet->keypair().secret_key, stolen.signing_body());
    own.send(Endpoint::client, stolen);
    demo.attacker = serve_request2(ctx, start.run, stolen, own, provider);
    demo.narrative.push_back("malware finishes the session on its own connection: " +
                             std::string(to_string(demo.attacker.kind)));

    AuthRequest2 honest{victim, *start.tx, *start.inclusion, precursor, {}};
    honest.signature = sign(user.wallet->keypair().secret_key, honest.signing_body());
    user.channel->send(Endpoint::client, honest);
    demo.victim = serve_request2(ctx, start.run, honest, *user.channel, provider);
    demo.narrative.push_back("user's own request 2 arrives second: " + std::string(to_string(demo.victim.kind)) +
                             " at step " + std::to_string(demo.victim.step) + "; the fresh session is dropped");
    return demo;
}

}  // namespace otpchain
