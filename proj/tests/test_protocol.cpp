#include <gtest/gtest.h>

#include <set>

#include "otpchain/protocol.hpp"

using namespace otpchain;

namespace {

World::Config config(std::uint64_t n, std::uint64_t seed = 1)
{
    World::Config c;
    c.rng_seed = seed;
    c.n_otps = n;
    return c;
}

std::size_t registry_size(World& w)
{
    return w.ledger().registry(w.provider().contract()).size();
}

/// Never forwards anything to the ledger.
class BlackholeLink final : public LedgerLink {
public:
    std::uint64_t forward(Ledger&, const InsertRequest&) override { return 0; }
    std::optional<Digest> resolve(std::uint64_t) const override { return std::nullopt; }
};

}  // namespace

class Completeness : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(Completeness, EveryIndexGrantedThenExhausted)
{
    const std::uint64_t n = GetParam();
    World w(config(n));
    w.bootstrap("alice");
    for (std::uint64_t i = 1; i <= n; ++i) {
        const auto o = w.authenticate("alice");
        ASSERT_TRUE(o.granted()) << "index " << i << ": " << o.reason;
        EXPECT_EQ(o.index, i);
        EXPECT_EQ(registry_size(w), 1u);
        EXPECT_EQ(w.provider().record("alice").session_id, i);
    }
    const auto last = w.authenticate("alice");
    EXPECT_EQ(last.kind, OutcomeKind::exhaustion);
    EXPECT_FALSE(w.check_misuse("alice"));
    EXPECT_TRUE(w.ledger().verify_chain());
}

INSTANTIATE_TEST_SUITE_P(Sizes, Completeness, ::testing::Values(4u, 16u));

TEST(Protocol, RegistryHoldsOneValuePerUser)
{
    World w(config(8));
    for (const char* u : {"a", "b", "c"}) w.bootstrap(u);
    for (int round = 0; round < 3; ++round) {
        for (const char* u : {"a", "b", "c"}) ASSERT_TRUE(w.authenticate(u).granted());
    }
    EXPECT_EQ(registry_size(w), 3u);
}

TEST(Protocol, HonestTranscriptCoversEveryStep)
{
    World w(config(4));
    w.bootstrap("alice");
    const std::uint64_t boot_run = w.transcript().last_run();
    ASSERT_TRUE(w.authenticate("alice").granted());
    const std::uint64_t auth_run = w.transcript().last_run();

    std::set<int> boot_steps, auth_steps;
    for (const auto& e : w.transcript().run_entries(boot_run)) boot_steps.insert(e.step);
    for (const auto& e : w.transcript().run_entries(auth_run)) auth_steps.insert(e.step);
    EXPECT_EQ(boot_steps.size(), 11u);
    EXPECT_EQ(*boot_steps.begin(), 1);
    EXPECT_EQ(auth_steps.size(), 17u);
    EXPECT_EQ(*auth_steps.rbegin(), 17);

    std::uint64_t prev = 0;
    for (const auto& e : w.transcript().entries()) {
        EXPECT_EQ(e.seq, prev + 1);
        prev = e.seq;
    }
}

TEST(Protocol, SameSeedSameTranscript)
{
    auto run = [] {
        World w(config(4, 42));
        w.bootstrap("alice");
        w.authenticate("alice");
        w.authenticate("alice");
        return w.transcript().to_text() + w.ledger().dump();
    };
    EXPECT_EQ(run(), run());
}

// Removing one factor from the honest run must never yield a grant.
enum class Factor { signature_key, otp_and_proof, precursor };

class FactorAblation : public ::testing::TestWithParam<std::tuple<Factor, std::uint64_t>> {};

TEST_P(FactorAblation, NotGranted)
{
    const auto [factor, index] = GetParam();
    World w(config(4, 100 + index));
    w.bootstrap("alice");
    for (std::uint64_t i = 1; i < index; ++i) ASSERT_TRUE(w.authenticate("alice").granted());

    AuthOptions opts;
    DeterministicRng noise(index);
    switch (factor) {
    case Factor::signature_key:
        opts.faults.signing_key = KeyPair::generate(noise).secret_key;
        break;
    case Factor::otp_and_proof:
        opts.faults.request1 = [&noise](AuthRequest1& r) {
            r.otp = noise.draw<OtpValue>();
            for (auto& s : r.proof.siblings) s.sibling = noise.draw<Digest>();
        };
        break;
    case Factor::precursor:
        opts.faults.precursor = [&noise](OtpValue& p) { p = noise.draw<OtpValue>(); };
        break;
    }
    const auto o = w.authenticate("alice", opts);
    EXPECT_FALSE(o.granted());
    const int expected_step = factor == Factor::signature_key ? 2 : factor == Factor::otp_and_proof ? 3 : 15;
    EXPECT_EQ(o.step, expected_step);
    EXPECT_EQ(w.user("alice").wallet->session_counter(), index);
}

INSTANTIATE_TEST_SUITE_P(AllFactorsAllIndices, FactorAblation,
                         ::testing::Combine(::testing::Values(Factor::signature_key, Factor::otp_and_proof,
                                                              Factor::precursor),
                                            ::testing::Values(1u, 2u, 3u, 4u)));

TEST(Protocol, OutOfOrderIndexWithoutEvidenceIsInvalid)
{
    World w(config(8));
    w.bootstrap("alice");
    const ClientWallet& wallet = *w.user("alice").wallet;
    const AuthMaterial skip{3, wallet.otp(3), wallet.tree().prove(2)};
    AuthRequest1 req{"alice", skip.index, skip.otp, skip.proof, {}};
    req.signature = sign(wallet.keypair().secret_key, req.signing_body());

    const auto o = w.provider().on_request1(req, w.ledger());
    ASSERT_TRUE(o);
    EXPECT_EQ(o->kind, OutcomeKind::aborted_invalid);
    EXPECT_EQ(o->step, 4);
    EXPECT_FALSE(o->evidence);
    ASSERT_EQ(w.provider().alerts().size(), 1u);
    EXPECT_EQ(w.provider().record("alice").phase, SessionPhase::idle);
}

TEST(Protocol, MembershipProofMustMatchIndex)
{
    World w(config(8));
    w.bootstrap("alice");
    const ClientWallet& wallet = *w.user("alice").wallet;
    AuthRequest1 req{"alice", 1, wallet.otp(2), wallet.tree().prove(1), {}};
    req.signature = sign(wallet.keypair().secret_key, req.signing_body());
    const auto o = w.provider().on_request1(req, w.ledger());
    ASSERT_TRUE(o);
    EXPECT_EQ(o->step, 3);
}

TEST(Protocol, UnknownAccountRejected)
{
    World w(config(4));
    w.bootstrap("alice");
    const ClientWallet& wallet = *w.user("alice").wallet;
    AuthRequest1 req{"bob", 1, wallet.otp(1), wallet.tree().prove(0), {}};
    req.signature = sign(wallet.keypair().secret_key, req.signing_body());
    const auto o = w.provider().on_request1(req, w.ledger());
    ASSERT_TRUE(o);
    EXPECT_EQ(o->step, 2);
}

TEST(Protocol, WrongInclusionProofRejectedAtSixteen)
{
    World w(config(4));
    w.bootstrap("alice");
    UserDevices& u = w.user("alice");
    SessionStart start = begin_authentication(w.ctx(), *u.wallet, *u.channel, w.provider());
    ASSERT_FALSE(start.failure);

    AuthRequest2 req{"alice", *start.tx, *start.inclusion,
                     u.authenticator->derive_precursor(start.index).precursor, {}};
    req.inclusion.block_height -= 1;
    req.signature = sign(u.wallet->keypair().secret_key, req.signing_body());
    const auto o = serve_request2(w.ctx(), start.run, req, *u.channel, w.provider());
    EXPECT_EQ(o.kind, OutcomeKind::aborted_invalid);
    EXPECT_EQ(o.step, 16);
}

TEST(Protocol, SessionIdNeverDecreases)
{
    World w(config(8, 9));
    w.bootstrap("alice");
    std::uint64_t last = 0;
    auto observe = [&] {
        const auto id = w.provider().record("alice").session_id;
        EXPECT_GE(id, last);
        last = id;
    };
    AuthOptions bad_precursor;
    bad_precursor.faults.precursor = [](OtpValue& p) { p.bytes[0] ^= 1; };
    AuthOptions bad_key;
    DeterministicRng r(1);
    bad_key.faults.signing_key = KeyPair::generate(r).secret_key;

    int grants = 0;
    for (int i = 0; i < 4; ++i) {
        const std::uint64_t before = w.provider().record("alice").session_id;
        const bool granted = w.authenticate("alice").granted();
        grants += granted;
        EXPECT_EQ(w.provider().record("alice").session_id, before + (granted ? 1 : 0));
        observe();
        w.authenticate("alice", bad_key);
        observe();
    }
    w.authenticate("alice", bad_precursor);
    observe();
    EXPECT_EQ(grants, 4);
}

TEST(Protocol, AbandonedSessionLeavesNothingOnChain)
{
    World::Config c = config(4);
    c.abandon_after_blocks = 3;
    World w(c);
    w.bootstrap("alice");
    BlackholeLink hole;
    AuthOptions opts;
    opts.link = &hole;
    const auto before = w.ledger().height();
    const auto o = w.authenticate("alice", opts);
    EXPECT_EQ(o.kind, OutcomeKind::abandoned);
    EXPECT_EQ(w.ledger().height(), before + 3);
    EXPECT_EQ(w.provider().record("alice").phase, SessionPhase::idle);
    EXPECT_FALSE(w.check_misuse("alice"));
    EXPECT_TRUE(w.authenticate("alice").granted());
}

TEST(Protocol, StaleSessionsAbandonedOnSeal)
{
    World::Config c = config(4);
    c.abandon_after_blocks = 2;
    World w(c);
    w.bootstrap("alice");
    UserDevices& u = w.user("alice");
    const SessionStart start = begin_authentication(w.ctx(), *u.wallet, *u.channel, w.provider());
    ASSERT_FALSE(start.failure);
    EXPECT_EQ(w.provider().abandon_stale_sessions(w.ledger()), 0u);
    w.ledger().seal_block();
    w.ledger().seal_block();
    EXPECT_EQ(w.provider().abandon_stale_sessions(w.ledger()), 1u);
    EXPECT_EQ(w.provider().record("alice").phase, SessionPhase::idle);
}

TEST(Bootstrap, TamperedCredentialRejected)
{
    World w(config(4));
    BootstrapOptions opts;
    opts.credential_tamper = [](VerifiableCredential& vc) { vc.claims["role"] = "admin"; };
    try {
        w.bootstrap("alice", opts);
        FAIL() << "accepted a tampered credential";
    } catch (const BootstrapRejected& e) {
        EXPECT_EQ(e.step(), 9);
    }
    EXPECT_FALSE(w.provider().has_record("alice"));
    EXPECT_FALSE(w.user("alice").wallet);
}

TEST(Bootstrap, UntrustedIssuerRejected)
{
    World w(config(4));
    DeterministicRng rng(5);
    IdentityProvider rogue(w.dids().create_did("sim:rogue"), KeyPair::generate(rng));
    EXPECT_THROW(run_bootstrap(w.ctx(), w.user("alice"), rogue, w.provider(), 4), BootstrapRejected);
}

TEST(Bootstrap, RevokedCredentialRejected)
{
    World w(config(4));
    BootstrapOptions opts;
    opts.credential_tamper = [&w](VerifiableCredential& vc) { w.identity_provider().revoke_credential(vc.digest()); };
    EXPECT_THROW(w.bootstrap("alice", opts), BootstrapRejected);
}

TEST(Bootstrap, SeedTypoAbortsBeforeRegistration)
{
    World w(config(4));
    BootstrapOptions opts;
    opts.seed_transfer = [](Mnemonic& m) { std::swap(m.words[0], m.words[1]); };
    EXPECT_THROW(w.bootstrap("alice", opts), MnemonicError);
    EXPECT_FALSE(w.provider().has_record("alice"));
}

TEST(Bootstrap, RegistrationReplayRejected)
{
    World w(config(4));
    w.bootstrap("alice");
    const auto& reg = std::get<RegistrationMessage>(w.user("alice").channel->message(0));
    try {
        w.provider().register_user(reg, {});
        FAIL() << "replayed registration accepted";
    } catch (const BootstrapRejected& e) {
        EXPECT_EQ(e.step(), 10);
    }
}

TEST(Reinit, RekeyUsesNoIdentityProvider)
{
    World w(config(4));
    w.bootstrap("alice");
    ASSERT_TRUE(w.authenticate("alice").granted());
    const auto old_key = w.user("alice").wallet->keypair();
    const std::size_t issued = w.identity_provider().issued_log().size();

    const std::uint64_t run = w.reinitialize("alice", ReinitMode::rekey_signed_by_old);
    EXPECT_EQ(w.transcript().count(run, Actor::identity_provider), 0u);
    EXPECT_EQ(w.identity_provider().issued_log().size(), issued);
    EXPECT_EQ(w.provider().record("alice").epoch, 2u);
    EXPECT_NE(w.user("alice").wallet->keypair(), old_key);
    EXPECT_TRUE(w.authenticate("alice").granted());

    AuthOptions stale;
    stale.faults.signing_key = old_key.secret_key;
    EXPECT_EQ(w.authenticate("alice", stale).step, 2);
}

TEST(Reinit, RekeyNeedsOldKeySignature)
{
    World w(config(4));
    w.bootstrap("alice");
    const auto& rec = w.provider().record("alice");
    DeterministicRng rng(77);
    const KeyPair thief = KeyPair::generate(rng);
    RekeyRequest req{"alice", thief.public_key, rng.draw<Digest>(), 4, {}};
    req.old_key_signature = sign(thief.secret_key, req.signing_body());
    EXPECT_THROW(w.provider().apply_rekey(req), Error);
    EXPECT_EQ(w.provider().record("alice").user_public_key, rec.user_public_key);
}

TEST(Reinit, FreshIdentityIssuesNewCredential)
{
    World w(config(4));
    w.bootstrap("alice");
    const Did old_did = w.provider().record("alice").did;
    const std::uint64_t run = w.reinitialize("alice", ReinitMode::fresh_identity);
    EXPECT_GT(w.transcript().count(run, Actor::identity_provider), 0u);
    EXPECT_NE(w.provider().record("alice").did, old_did);
    EXPECT_TRUE(w.authenticate("alice").granted());
}

TEST(Messages, SigningBodiesAreDomainSeparated)
{
    AuthRequest1 r1{"a", 1, {}, {}, {}};
    RekeyRequest rk{"a", {}, {}, 1, {}};
    RegistrationMessage reg;
    reg.account = "a";
    AuthRequest2 r2;
    r2.account = "a";
    const std::set<Bytes> bodies = {r1.signing_body(), rk.signing_body(), reg.signing_body(), r2.signing_body()};
    EXPECT_EQ(bodies.size(), 4u);
    EXPECT_EQ(message_name(Message{r1}), "auth_request_1");
    EXPECT_EQ(message_digest(Message{r1}), message_digest(Message{r1}));
}

TEST(Channel, ObserverSeesOnlySealedRecords)
{
    DeterministicRng rng(1);
    SecureChannel a("alice", "p", rng), b("alice", "p", rng);
    const Message m = AccessGranted{"alice", 1};
    a.send(Endpoint::provider, m);
    b.send(Endpoint::provider, m);
    const auto ra = a.observe(), rb = b.observe();
    ASSERT_EQ(ra.size(), 1u);
    EXPECT_EQ(ra[0].length, encode_message(m).size());
    EXPECT_NE(ra[0].ciphertext_tag, rb[0].ciphertext_tag);
    EXPECT_NE(ra[0].ciphertext_tag, message_digest(m));
    EXPECT_THROW(a.replay(rb[0]), Error);

    const Message& again = a.replay(ra[0]);
    EXPECT_EQ(message_digest(again), message_digest(m));
    EXPECT_EQ(a.size(), 2u);
}
