#include <gtest/gtest.h>

#include "otpchain/crypto.hpp"
#include "otpchain/mnemonic.hpp"

using namespace otpchain;

namespace {

std::string encode_hex(std::string_view hex)
{
    return mnemonic_encode(from_hex(hex)).to_string();
}

/// Fraction of single-word substitutions caught by the checksum, over every
/// position and a fixed sample of replacement words.
double substitution_detection_rate(std::size_t payload_len, std::uint64_t seed)
{
    DeterministicRng rng(seed);
    std::size_t trials = 0, caught = 0;
    for (int round = 0; round < 20; ++round) {
        Bytes payload(payload_len);
        rng.fill(payload);
        const Mnemonic m = mnemonic_encode(payload);
        for (std::size_t pos = 0; pos < m.words.size(); ++pos) {
            for (int k = 0; k < 40; ++k) {
                Mnemonic changed = m;
                const auto& list = wordlist();
                std::string replacement(list[rng.next_u64() % list.size()]);
                if (replacement == changed.words[pos]) continue;
                changed.words[pos] = replacement;
                ++trials;
                try {
                    mnemonic_decode(changed);
                } catch (const MnemonicError& e) {
                    caught += e.kind() == MnemonicError::Kind::checksum_mismatch;
                }
            }
        }
    }
    return static_cast<double>(caught) / static_cast<double>(trials);
}

}  // namespace

TEST(Mnemonic, WordlistShape)
{
    const auto& list = wordlist();
    EXPECT_EQ(list.front(), "abandon");
    EXPECT_EQ(list.back(), "zoo");
    EXPECT_TRUE(std::is_sorted(list.begin(), list.end()));
}

TEST(Mnemonic, ReferenceVectors)
{
    EXPECT_EQ(encode_hex("00000000000000000000000000000000"),
              "abandon abandon abandon abandon abandon abandon abandon abandon abandon abandon abandon about");
    EXPECT_EQ(encode_hex("80808080808080808080808080808080"),
              "letter advice cage absurd amount doctor acoustic avoid letter advice cage above");
    EXPECT_EQ(encode_hex("7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f7f"),
              "legal winner thank year wave sausage worth useful legal winner thank year wave sausage worth useful "
              "legal winner thank year wave sausage worth title");
    EXPECT_EQ(encode_hex("000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f"),
              "abandon amount liar amount expire adjust cage candy arch gather drum bullet absurd math era live bid "
              "rhythm alien crouch range attend journey unaware");
}

TEST(Mnemonic, WordCounts)
{
    EXPECT_EQ(mnemonic_encode(Bytes(16)).words.size(), 12u);
    EXPECT_EQ(mnemonic_encode(Bytes(32)).words.size(), 24u);
}

TEST(Mnemonic, BijectionOverRandomPayloads)
{
    DeterministicRng rng(2024);
    for (int i = 0; i < 100; ++i) {
        Bytes payload(i % 2 == 0 ? 16 : 32);
        rng.fill(payload);
        const Mnemonic m = mnemonic_encode(payload);
        EXPECT_EQ(mnemonic_decode(m), payload);
        EXPECT_EQ(Mnemonic::parse(m.to_string()), m);
    }
}

TEST(Mnemonic, ParseNormalisesWhitespaceAndCase)
{
    const Mnemonic m = Mnemonic::parse("  Abandon abandon\tabandon abandon abandon abandon\n abandon abandon abandon "
                                       "abandon abandon ABOUT ");
    EXPECT_EQ(mnemonic_decode(m), Bytes(16));
}

TEST(Mnemonic, Errors)
{
    auto kind_of = [](auto&& fn) {
        try {
            fn();
        } catch (const MnemonicError& e) {
            return e.kind();
        }
        ADD_FAILURE() << "no MnemonicError";
        return MnemonicError::Kind::bad_payload_length;
    };
    using K = MnemonicError::Kind;
    EXPECT_EQ(kind_of([] { mnemonic_encode(Bytes(15)); }), K::bad_payload_length);
    EXPECT_EQ(kind_of([] { mnemonic_encode(Bytes{}); }), K::bad_payload_length);

    Mnemonic m = mnemonic_encode(Bytes(16));
    Mnemonic short_m = m;
    short_m.words.pop_back();
    EXPECT_EQ(kind_of([&] { mnemonic_decode(short_m); }), K::wrong_word_count);

    Mnemonic unknown = m;
    unknown.words[3] = "bitcoinz";
    EXPECT_EQ(kind_of([&] { mnemonic_decode(unknown); }), K::unknown_word);

    Mnemonic bad_sum = m;
    bad_sum.words.back() = "abandon";
    EXPECT_EQ(kind_of([&] { mnemonic_decode(bad_sum); }), K::checksum_mismatch);
}

TEST(Mnemonic, ChecksumCatchesSubstitutionsIn24Words)
{
    // 8 checksum bits: expect about 255/256.
    EXPECT_GE(substitution_detection_rate(32, 1), 0.99);
}

TEST(Mnemonic, ChecksumCatchesSubstitutionsIn12Words)
{
    // 4 checksum bits bound this at 15/16.
    const double rate = substitution_detection_rate(16, 2);
    EXPECT_GE(rate, 0.93);
    EXPECT_LE(rate, 0.96);
}

TEST(Mnemonic, LoadWordlistValidates)
{
    const auto words = load_wordlist(OTPCHAIN_DATA_DIR "/english.txt");
    ASSERT_EQ(words.size(), 2048u);
    EXPECT_EQ(words[1], "ability");
    EXPECT_THROW(load_wordlist(OTPCHAIN_DATA_DIR "/does-not-exist.txt"), Error);
}
