#include "otpchain/identity.hpp"

#include <algorithm>

namespace otpchain {

std::string Did::to_string() const
{
    return "did:" + scheme + ":" + address;
}

Did Did::parse(std::string_view text)
{
    constexpr std::string_view prefix = "did:";
    if (text.substr(0, prefix.size()) != prefix) throw Error("DID must start with 'did:'");
    text.remove_prefix(prefix.size());
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
        throw Error("DID must have the form did:<scheme>:<address>");
    }
    return Did{std::string(text.substr(0, colon)), std::string(text.substr(colon + 1))};
}

Did DidRegistry::create_did(std::string_view scheme)
{
    const std::uint64_t n = counter_++;
    const Digest d = hash(ByteWriter{}.field("did-registry").field(chain_label_).field(scheme).u64(n).bytes());
    Did did{std::string(scheme), to_hex(ByteView(d.bytes).first(16))};
    dids_.insert(did);
    return did;
}

Bytes VerifiableCredential::signing_body() const
{
    ByteWriter w;
    w.field("vc/v1").field(did.to_string()).raw(user_public_key).u32(static_cast<std::uint32_t>(claims.size()));
    for (const auto& [k, v] : claims) w.field(k).field(v);
    w.field(issuer_did.to_string());
    return w.take();
}

Digest VerifiableCredential::digest() const
{
    return hash(signing_body());
}

Bytes VerifiableCredential::export_bytes() const
{
    ByteWriter w;
    w.u8(kFormatVersion).field(signing_body()).raw(issuer_signature);
    return w.take();
}

VerifiableCredential VerifiableCredential::import_bytes(ByteView data)
{
    ByteReader outer(data);
    if (outer.u8() != kFormatVersion) throw Error("unsupported credential format version");
    ByteReader r(outer.field());
    VerifiableCredential vc;
    vc.issuer_signature = outer.fixed<Signature>();
    if (!outer.done()) throw Error("trailing bytes after credential");

    if (r.string_field() != "vc/v1") throw Error("bad credential tag");
    vc.did = Did::parse(r.string_field());
    vc.user_public_key = r.fixed<PublicKey>();
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string k = r.string_field();
        vc.claims[k] = r.string_field();
    }
    vc.issuer_did = Did::parse(r.string_field());
    if (!r.done()) throw Error("trailing bytes in credential body");
    return vc;
}

IdentityProvider::IdentityProvider(Did did, KeyPair keypair, VettingPolicy policy)
    : did_(std::move(did)), keypair_(keypair), policy_(std::move(policy))
{
    if (!policy_) policy_ = [](const Did&, const Claims&) { return true; };
}

VerifiableCredential IdentityProvider::issue_credential(const DidRegistry& registry, const Did& did,
                                                        const PublicKey& pk, const Claims& claims)
{
    if (!registry.contains(did)) throw Error("unknown DID " + did.to_string());
    if (!policy_(did, claims)) throw Error("identity vetting refused " + did.to_string());
    VerifiableCredential vc{did, pk, claims, did_, {}};
    vc.issuer_signature = sign(keypair_.secret_key, vc.signing_body());
    issued_log_.push_back(vc.digest());
    return vc;
}

void IdentityProvider::revoke_credential(const Digest& credential_digest)
{
    if (std::find(issued_log_.begin(), issued_log_.end(), credential_digest) == issued_log_.end()) {
        throw Error("cannot revoke a credential that was never issued");
    }
    revocations_.insert(credential_digest);
}

bool verify_credential(const VerifiableCredential& cred, const PublicKey& issuer_pk, const std::set<Digest>& revocations)
{
    if (!verify(issuer_pk, cred.signing_body(), cred.issuer_signature)) return false;
    return revocations.count(cred.digest()) == 0;
}

}  // namespace otpchain
