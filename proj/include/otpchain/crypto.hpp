#pragma once

#include <cstdint>
#include <random>

#include "otpchain/bytes.hpp"

namespace otpchain {

struct DigestTag {};
struct OtpTag {};
struct SeedTag {};
struct PublicKeyTag {};
struct SecretKeyTag {};
struct SignatureTag {};

/// SHA-256 output.
using Digest = FixedBytes<32, DigestTag>;
/// A 16-byte one-time password (or precursor): the prefix of a Digest.
using OtpValue = FixedBytes<16, OtpTag>;
using PublicKey = FixedBytes<32, PublicKeyTag>;
using SecretKey = FixedBytes<64, SecretKeyTag>;
using Signature = FixedBytes<64, SignatureTag>;

/// Deterministic random source for the whole simulation. Every seed and key
/// in a run is drawn from one of these so that a run is reproducible from
/// its 64-bit seed.
class DeterministicRng {
public:
    explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    void fill(std::span<std::uint8_t> out);

    template <typename T>
    T draw()
    {
        T v;
        fill(v.bytes);
        return v;
    }

private:
    std::mt19937_64 engine_;
};

/// Secret seed k held by the authenticator.
struct Seed : FixedBytes<32, SeedTag> {
    static Seed generate(DeterministicRng& rng);
    static Seed from(ByteView src);
};

Digest hash(ByteView data);
Digest hash(ByteView a, ByteView b);

/// F_k(i) = h(k || be64(i)), i >= 1.
Digest prf(const Seed& seed, std::uint64_t index);

/// First 16 bytes of a digest.
OtpValue truncate_to_otp(const Digest& d);

struct KeyPair {
    PublicKey public_key;
    SecretKey secret_key;

    static KeyPair generate(DeterministicRng& rng);
    static KeyPair from_seed(ByteView seed32);

    bool operator==(const KeyPair&) const = default;
};

Signature sign(const SecretKey& sk, ByteView msg);
bool verify(const PublicKey& pk, ByteView msg, const Signature& sig);
/// Raw-bytes variant: wrong lengths or invalid key encodings return false.
bool verify(ByteView pk, ByteView msg, ByteView sig);

}  // namespace otpchain
