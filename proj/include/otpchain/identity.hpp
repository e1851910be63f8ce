#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "otpchain/crypto.hpp"

namespace otpchain {

/// did:<scheme>:<address>. The scheme names the identity chain; the address
/// is derived from a registry counter and never from user data.
struct Did {
    std::string scheme;
    std::string address;

    std::string to_string() const;
    static Did parse(std::string_view text);

    auto operator<=>(const Did&) const = default;
};

/// Simulated identity-oriented ledger. Creation never refuses.
class DidRegistry {
public:
    explicit DidRegistry(std::string chain_label = "sim") : chain_label_(std::move(chain_label)) {}

    Did create_did(std::string_view scheme);
    bool contains(const Did& did) const { return dids_.count(did) != 0; }
    std::size_t size() const { return dids_.size(); }

private:
    std::string chain_label_;
    std::uint64_t counter_ = 0;
    std::set<Did> dids_;
};

using Claims = std::map<std::string, std::string>;

struct VerifiableCredential {
    static constexpr std::uint8_t kFormatVersion = 1;

    Did did;
    PublicKey user_public_key;
    Claims claims;
    Did issuer_did;
    Signature issuer_signature;

    /// Length-prefixed (did, user_public_key, claims, issuer_did) in fixed
    /// order; this is what the issuer signs.
    Bytes signing_body() const;
    /// Digest of the signing body. Identifies the credential in issuance
    /// logs and revocation sets.
    Digest digest() const;

    /// Version byte, signing body, signature.
    Bytes export_bytes() const;
    static VerifiableCredential import_bytes(ByteView data);

    bool operator==(const VerifiableCredential&) const = default;
};

/// Document-based vetting hook; the default approves every request.
using VettingPolicy = std::function<bool(const Did&, const Claims&)>;

class IdentityProvider {
public:
    IdentityProvider(Did did, KeyPair keypair, VettingPolicy policy = {});

    const Did& did() const { return did_; }
    const PublicKey& public_key() const { return keypair_.public_key; }

    /// Throws Error if the DID is not registered or vetting refuses.
    VerifiableCredential issue_credential(const DidRegistry& registry, const Did& did, const PublicKey& pk,
                                          const Claims& claims);
    /// Idempotent; throws Error for a digest that was never issued.
    void revoke_credential(const Digest& credential_digest);

    const std::vector<Digest>& issued_log() const { return issued_log_; }
    const std::set<Digest>& revocations() const { return revocations_; }

private:
    Did did_;
    KeyPair keypair_;
    VettingPolicy policy_;
    std::vector<Digest> issued_log_;
    std::set<Digest> revocations_;
};

bool verify_credential(const VerifiableCredential& cred, const PublicKey& issuer_pk,
                       const std::set<Digest>& revocations);

}  // namespace otpchain
