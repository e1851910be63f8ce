#include <gtest/gtest.h>

#include "otpchain/otp.hpp"

using namespace otpchain;

namespace {

struct Fixture {
    DeterministicRng rng{404};
    Authenticator authenticator{Seed::generate(rng), 16};
    KeyPair keypair = KeyPair::generate(rng);
    ClientWallet wallet = ClientWallet::bootstrap(authenticator.export_seed(), 16, keypair);
};

}  // namespace

TEST(OtpProperty, PrecursorHashesToOtpForEveryIndex)
{
    Fixture f;
    for (std::uint64_t i = 1; i <= 16; ++i) {
        const PrecursorReveal r = f.authenticator.derive_precursor(i);
        EXPECT_EQ(truncate_to_otp(hash(r.precursor.view())), f.wallet.otp(i));
        EXPECT_EQ(otp_from_precursor(r.precursor), f.wallet.otp(i));
        EXPECT_EQ(OtpValue::from(mnemonic_decode(r.encoding)), r.precursor);
        EXPECT_EQ(r.encoding.words.size(), 12u);
    }
}

TEST(Otp, WalletTreeCommitsToOtps)
{
    Fixture f;
    EXPECT_EQ(f.wallet.capacity(), 16u);
    EXPECT_EQ(f.wallet.root(), MerkleTree::build(f.wallet.otps()).root());
    EXPECT_EQ(f.wallet.session_counter(), 1u);
}

TEST(Otp, AuthMaterialFollowsCounter)
{
    Fixture f;
    for (std::uint64_t i = 1; i <= 16; ++i) {
        const AuthMaterial m = f.wallet.next_auth_material();
        EXPECT_EQ(m.index, i);
        EXPECT_EQ(m.proof.leaf_index, i - 1);
        EXPECT_TRUE(verify_proof(f.wallet.root(), m.otp, m.proof, 16));
        f.wallet.confirm_success(i);
    }
    EXPECT_THROW(f.wallet.next_auth_material(), OtpExhausted);
}

TEST(Otp, ConfirmOnlyCurrentIndex)
{
    Fixture f;
    EXPECT_THROW(f.wallet.confirm_success(2), Error);
    f.wallet.confirm_success(1);
    EXPECT_THROW(f.wallet.confirm_success(1), Error);
}

TEST(Otp, IndexRangeChecks)
{
    Fixture f;
    EXPECT_THROW(f.authenticator.derive_precursor(0), Error);
    EXPECT_THROW(f.authenticator.derive_precursor(17), Error);
    EXPECT_THROW(f.wallet.otp(0), Error);
    EXPECT_THROW(f.wallet.otp(17), Error);
    EXPECT_THROW(derive_all_otps(Seed{}, 3), Error);
    EXPECT_THROW(Authenticator(Seed{}, 12), Error);
}

TEST(Otp, SeedTransferFailsOnTypo)
{
    Fixture f;
    Mnemonic words = f.authenticator.export_seed();
    words.words[5] = words.words[5] == "zoo" ? "abandon" : "zoo";
    EXPECT_THROW(ClientWallet::bootstrap(words, 16, f.keypair), Error);
}

TEST(Otp, AuthenticatorPersistence)
{
    Fixture f;
    const Bytes blob = f.authenticator.serialize();
    EXPECT_EQ(blob.size(), 4u + 1u + 32u + 8u);
    const Authenticator back = Authenticator::deserialize(blob);
    EXPECT_EQ(back.seed(), f.authenticator.seed());
    EXPECT_EQ(back.capacity(), 16u);

    Bytes bad = blob;
    bad[4] = 9;
    EXPECT_THROW(Authenticator::deserialize(bad), Error);
}

TEST(Otp, WalletPersistence)
{
    Fixture f;
    f.wallet.confirm_success(1);
    const Bytes blob = f.wallet.serialize();
    const ClientWallet back = ClientWallet::deserialize(blob);
    EXPECT_EQ(back, f.wallet);
    EXPECT_EQ(back.session_counter(), 2u);

    Bytes tampered = blob;
    tampered[tampered.size() / 2] ^= 0x10;
    EXPECT_THROW(ClientWallet::deserialize(tampered), Error);
    EXPECT_THROW(ClientWallet::deserialize(Bytes(blob.begin(), blob.begin() + 20)), Error);
}
