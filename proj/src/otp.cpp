#include "otpchain/otp.hpp"

namespace otpchain {

namespace {

constexpr std::array<std::uint8_t, 4> kAuthenticatorMagic = {'O', 'T', 'P', 'A'};
constexpr std::array<std::uint8_t, 4> kWalletMagic = {'O', 'T', 'P', 'W'};
constexpr std::uint8_t kPersistVersion = 1;

void check_magic(ByteView data, const std::array<std::uint8_t, 4>& magic, const char* what)
{
    if (data.size() < 5 || !std::equal(magic.begin(), magic.end(), data.begin())) {
        throw Error(std::string("not a serialized ") + what);
    }
    if (data[4] != kPersistVersion) throw Error(std::string("unsupported ") + what + " version");
}

void check_capacity(std::uint64_t n)
{
    if (n < 2 || !is_power_of_two(n)) {
        throw Error("OTP count must be a power of two >= 2, got " + std::to_string(n));
    }
}

}  // namespace

OtpValue derive_precursor_value(const Seed& seed, std::uint64_t index)
{
    return truncate_to_otp(prf(seed, index));
}

OtpValue otp_from_precursor(const OtpValue& precursor)
{
    return truncate_to_otp(hash(precursor.view()));
}

std::vector<OtpValue> derive_all_otps(const Seed& seed, std::uint64_t n)
{
    check_capacity(n);
    std::vector<OtpValue> out;
    out.reserve(n);
    for (std::uint64_t i = 1; i <= n; ++i) out.push_back(otp_from_precursor(derive_precursor_value(seed, i)));
    return out;
}

Authenticator::Authenticator(Seed seed, std::uint64_t capacity) : seed_(seed), capacity_(capacity)
{
    check_capacity(capacity);
}

PrecursorReveal Authenticator::derive_precursor(std::uint64_t index) const
{
    if (index < 1 || index > capacity_) {
        throw Error("precursor index " + std::to_string(index) + " outside 1.." + std::to_string(capacity_));
    }
    PrecursorReveal r;
    r.index = index;
    r.precursor = derive_precursor_value(seed_, index);
    r.encoding = mnemonic_encode(r.precursor.view());
    return r;
}

Mnemonic Authenticator::export_seed() const
{
    return mnemonic_encode(seed_.view());
}

Bytes Authenticator::serialize() const
{
    Bytes out(kAuthenticatorMagic.begin(), kAuthenticatorMagic.end());
    out.push_back(kPersistVersion);
    out.insert(out.end(), seed_.bytes.begin(), seed_.bytes.end());
    write_u64_le(out, capacity_);
    return out;
}

Authenticator Authenticator::deserialize(ByteView data)
{
    check_magic(data, kAuthenticatorMagic, "authenticator");
    if (data.size() != 5 + 32 + 8) throw Error("authenticator record has wrong length");
    return Authenticator(Seed::from(data.subspan(5, 32)), read_u64_le(data.subspan(37, 8)));
}

ClientWallet ClientWallet::bootstrap(const Mnemonic& seed_words, std::uint64_t n, const KeyPair& keypair)
{
    check_capacity(n);
    // The seed only exists inside this scope.
    const Seed seed = Seed::from(mnemonic_decode(seed_words));
    ClientWallet w;
    w.keypair_ = keypair;
    w.otps_ = derive_all_otps(seed, n);
    w.tree_ = MerkleTree::build(w.otps_);
    w.session_counter_ = 1;
    return w;
}

const OtpValue& ClientWallet::otp(std::uint64_t index) const
{
    if (index < 1 || index > otps_.size()) throw Error("OTP index " + std::to_string(index) + " out of range");
    return otps_[index - 1];
}

AuthMaterial ClientWallet::next_auth_material() const
{
    if (session_counter_ > capacity()) throw OtpExhausted(capacity());
    return {session_counter_, otps_[session_counter_ - 1], tree_.prove(session_counter_ - 1)};
}

void ClientWallet::confirm_success(std::uint64_t index)
{
    if (index != session_counter_) {
        throw Error("confirmed index " + std::to_string(index) + " is not the pending index " +
                    std::to_string(session_counter_));
    }
    ++session_counter_;
}

Bytes ClientWallet::serialize() const
{
    Bytes out(kWalletMagic.begin(), kWalletMagic.end());
    out.push_back(kPersistVersion);
    out.insert(out.end(), keypair_.public_key.bytes.begin(), keypair_.public_key.bytes.end());
    out.insert(out.end(), keypair_.secret_key.bytes.begin(), keypair_.secret_key.bytes.end());
    write_u64_le(out, session_counter_);
    write_u64_le(out, otps_.size());
    for (const auto& o : otps_) out.insert(out.end(), o.bytes.begin(), o.bytes.end());
    const Bytes tree = tree_.serialize();
    write_u64_le(out, tree.size());
    out.insert(out.end(), tree.begin(), tree.end());
    if (credential_) {
        const Bytes vc = credential_->export_bytes();
        out.push_back(1);
        write_u64_le(out, vc.size());
        out.insert(out.end(), vc.begin(), vc.end());
    } else {
        out.push_back(0);
    }
    return out;
}

ClientWallet ClientWallet::deserialize(ByteView data)
{
    check_magic(data, kWalletMagic, "wallet");
    std::size_t pos = 5;
    auto take = [&](std::size_t n) {
        if (data.size() - pos < n) throw Error("truncated wallet record");
        ByteView v = data.subspan(pos, n);
        pos += n;
        return v;
    };
    auto take_u64 = [&] { return read_u64_le(take(8)); };

    ClientWallet w;
    w.keypair_.public_key = PublicKey::from(take(32));
    w.keypair_.secret_key = SecretKey::from(take(64));
    w.session_counter_ = take_u64();
    const std::uint64_t n = take_u64();
    check_capacity(n);
    if (n > (data.size() - pos) / OtpValue::size) throw Error("truncated wallet record");
    w.otps_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) w.otps_.push_back(OtpValue::from(take(OtpValue::size)));
    w.tree_ = MerkleTree::deserialize(take(take_u64()));
    if (w.tree_ != MerkleTree::build(w.otps_)) throw Error("wallet tree does not match its OTPs");
    if (w.session_counter_ < 1 || w.session_counter_ > n + 1) throw Error("wallet counter out of range");
    if (take(1)[0] == 1) w.credential_ = VerifiableCredential::import_bytes(take(take_u64()));
    if (pos != data.size()) throw Error("trailing bytes in wallet record");
    return w;
}

}  // namespace otpchain
