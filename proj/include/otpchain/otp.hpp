#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "otpchain/crypto.hpp"
#include "otpchain/identity.hpp"
#include "otpchain/merkle.hpp"
#include "otpchain/mnemonic.hpp"

namespace otpchain {

inline constexpr std::uint64_t kDefaultOtpCount = 1024;

/// Raised when the wallet has used every OTP; the account must be
/// reinitialized.
class OtpExhausted : public Error {
public:
    explicit OtpExhausted(std::uint64_t capacity)
        : Error("all " + std::to_string(capacity) + " OTPs used; reinitialization required")
    {
    }
};

/// OTP'_i = truncate(F_k(i)), i in 1..N.
OtpValue derive_precursor_value(const Seed& seed, std::uint64_t index);
/// OTP_i = truncate(hash(OTP'_i)).
OtpValue otp_from_precursor(const OtpValue& precursor);
/// All N OTPs; element i-1 holds OTP_i. N must be a power of two >= 2.
std::vector<OtpValue> derive_all_otps(const Seed& seed, std::uint64_t n);

struct PrecursorReveal {
    std::uint64_t index = 0;
    OtpValue precursor;
    Mnemonic encoding;
};

/// The air-gapped authenticator. It keeps only the seed and the capacity;
/// precursors are recomputed on demand.
class Authenticator {
public:
    Authenticator(Seed seed, std::uint64_t capacity);

    std::uint64_t capacity() const { return capacity_; }

    /// Throws Error unless 1 <= index <= capacity.
    PrecursorReveal derive_precursor(std::uint64_t index) const;
    /// The seed as it would be displayed for transcription during bootstrap.
    Mnemonic export_seed() const;

    /// Persistence: magic "OTPA", u8 version, 32-byte seed, u64 N (little-endian).
    Bytes serialize() const;
    static Authenticator deserialize(ByteView data);

    /// Exposed for the stolen-authenticator adversary and for tests.
    const Seed& seed() const { return seed_; }

private:
    Seed seed_;
    std::uint64_t capacity_;
};

struct AuthMaterial {
    std::uint64_t index = 0;
    OtpValue otp;
    MerkleProof proof;
};

/// Client-side state after bootstrap. It is built from a transcribed seed
/// mnemonic, and neither the seed nor any precursor is kept: the type has no
/// field that could hold them.
class ClientWallet {
public:
    /// Decodes the seed words (throws MnemonicError on a bad transfer),
    /// derives the OTPs, builds and stores the whole tree.
    static ClientWallet bootstrap(const Mnemonic& seed_words, std::uint64_t n, const KeyPair& keypair);

    const KeyPair& keypair() const { return keypair_; }
    const MerkleTree& tree() const { return tree_; }
    const Digest& root() const { return tree_.root(); }
    std::uint64_t capacity() const { return tree_.leaf_count(); }
    const std::vector<OtpValue>& otps() const { return otps_; }
    /// OTP_i for 1 <= i <= N.
    const OtpValue& otp(std::uint64_t index) const;
    /// Next unused index; N + 1 once exhausted.
    std::uint64_t session_counter() const { return session_counter_; }

    const std::optional<VerifiableCredential>& credential() const { return credential_; }
    void set_credential(VerifiableCredential vc) { credential_ = std::move(vc); }

    /// (i, OTP_i, proof) for the current counter. Does not advance it.
    AuthMaterial next_auth_material() const;
    /// Called once the provider has granted access for `index`.
    void confirm_success(std::uint64_t index);

    /// Persistence: magic "OTPW", u8 version, keypair, counter, OTPs, tree,
    /// optional credential. Integers little-endian.
    Bytes serialize() const;
    static ClientWallet deserialize(ByteView data);

    bool operator==(const ClientWallet&) const = default;

private:
    ClientWallet() = default;

    KeyPair keypair_;
    MerkleTree tree_;
    std::vector<OtpValue> otps_;
    std::uint64_t session_counter_ = 1;
    std::optional<VerifiableCredential> credential_;
};

}  // namespace otpchain
