#include <gtest/gtest.h>

#include "otpchain/crypto.hpp"
#include "otpchain/otp.hpp"

using namespace otpchain;

namespace {

Seed counting_seed()
{
    Seed s;
    for (std::size_t i = 0; i < s.bytes.size(); ++i) s.bytes[i] = static_cast<std::uint8_t>(i);
    return s;
}

}  // namespace

TEST(Hash, KnownSha256Vectors)
{
    EXPECT_EQ(to_hex(hash(as_bytes(""))), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(to_hex(hash(as_bytes("abc"))), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Hash, TwoPartFormIsConcatenation)
{
    EXPECT_EQ(hash(as_bytes("ab"), as_bytes("c")), hash(as_bytes("abc")));
}

TEST(Prf, ZeroSeedFirstIndex)
{
    const Seed zero;
    EXPECT_EQ(to_hex(prf(zero, 1)), "08e00266fff0aacc64974f22a53622a7dc458ac1b5fd446ae7c99a4a99a564e6");
    EXPECT_EQ(to_hex(derive_precursor_value(zero, 1)), "08e00266fff0aacc64974f22a53622a7");
}

TEST(Prf, CountingSeedPrecursorsAndOtps)
{
    const Seed s = counting_seed();
    EXPECT_EQ(to_hex(derive_precursor_value(s, 1)), "6061c4386d7a1788ba52e2e8b2ee6fe6");
    EXPECT_EQ(to_hex(derive_precursor_value(s, 2)), "7365a07b4571dc929c3629031f2b3b81");
    const auto otps = derive_all_otps(s, 2);
    EXPECT_EQ(to_hex(otps[0]), "d70c8a786a6c976f348b111e5411c9fb");
    EXPECT_EQ(to_hex(otps[1]), "748402289b628050fa2cc2a59244a0f5");
}

TEST(Prf, IndexZeroRejected)
{
    EXPECT_THROW(prf(Seed{}, 0), Error);
}

TEST(Prf, DistinctIndicesDistinctOutputs)
{
    const Seed s = counting_seed();
    EXPECT_NE(prf(s, 1), prf(s, 2));
    EXPECT_NE(prf(s, 1), prf(Seed{}, 1));
}

TEST(Rng, SameSeedSameStream)
{
    DeterministicRng a(99), b(99), c(100);
    EXPECT_EQ(a.draw<Digest>(), b.draw<Digest>());
    EXPECT_NE(a.draw<Digest>(), c.draw<Digest>());
}

TEST(Rng, FillHandlesPartialWords)
{
    DeterministicRng a(5), b(5);
    std::array<std::uint8_t, 13> odd{};
    a.fill(odd);
    std::array<std::uint8_t, 16> whole{};
    b.fill(whole);
    EXPECT_TRUE(std::equal(odd.begin(), odd.end(), whole.begin()));
}

TEST(Signature, RoundTripAndTamper)
{
    DeterministicRng rng(3);
    const KeyPair kp = KeyPair::generate(rng);
    const Bytes msg = {1, 2, 3, 4};
    const Signature sig = sign(kp.secret_key, msg);
    EXPECT_TRUE(verify(kp.public_key, msg, sig));

    Bytes other = msg;
    other[0] ^= 1;
    EXPECT_FALSE(verify(kp.public_key, other, sig));

    Signature bad = sig;
    bad.bytes[10] ^= 0x40;
    EXPECT_FALSE(verify(kp.public_key, msg, bad));

    const KeyPair stranger = KeyPair::generate(rng);
    EXPECT_FALSE(verify(stranger.public_key, msg, sig));
}

TEST(Signature, WrongSizesFailClosed)
{
    const Bytes short_key(31, 0);
    const Bytes sig(64, 0);
    EXPECT_FALSE(verify(ByteView(short_key), as_bytes("m"), ByteView(sig)));
}

TEST(Signature, SeededKeysAreDeterministic)
{
    const Bytes seed(32, 7);
    EXPECT_EQ(KeyPair::from_seed(seed), KeyPair::from_seed(seed));
    EXPECT_THROW(KeyPair::from_seed(Bytes(31, 7)), Error);
}

TEST(Hex, RoundTripAndErrors)
{
    const Bytes b = {0x00, 0xab, 0xff};
    EXPECT_EQ(to_hex(b), "00abff");
    EXPECT_EQ(from_hex("00ABff"), b);
    EXPECT_THROW(from_hex("abc"), Error);
    EXPECT_THROW(from_hex("zz"), Error);
}

TEST(ByteCodec, FieldsRoundTrip)
{
    ByteWriter w;
    w.u8(7).u32(0x01020304).u64(42).field("hello");
    const Bytes out = w.take();
    EXPECT_EQ(out[1], 0x01);  // big-endian

    ByteReader r(out);
    EXPECT_EQ(r.u8(), 7);
    EXPECT_EQ(r.u32(), 0x01020304u);
    EXPECT_EQ(r.u64(), 42u);
    EXPECT_EQ(r.string_field(), "hello");
    EXPECT_TRUE(r.done());
    EXPECT_THROW(r.u8(), Error);
}
