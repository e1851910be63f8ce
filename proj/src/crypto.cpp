#include "otpchain/crypto.hpp"

#include <sodium.h>

#include <algorithm>

namespace otpchain {

namespace {

void ensure_sodium()
{
    static const int rc = sodium_init();
    if (rc < 0) {
        throw Error("libsodium initialisation failed");
    }
}

int hex_nibble(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

std::string to_hex(ByteView data)
{
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0) throw Error("odd-length hex string");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_nibble(hex[2 * i]);
        int lo = hex_nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw Error("invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

ByteWriter& ByteWriter::u8(std::uint8_t v)
{
    out_.push_back(v);
    return *this;
}

ByteWriter& ByteWriter::u32(std::uint32_t v)
{
    for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
    return *this;
}

ByteWriter& ByteWriter::u64(std::uint64_t v)
{
    for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
    return *this;
}

ByteWriter& ByteWriter::raw(ByteView data)
{
    out_.insert(out_.end(), data.begin(), data.end());
    return *this;
}

ByteWriter& ByteWriter::field(ByteView data)
{
    u32(static_cast<std::uint32_t>(data.size()));
    return raw(data);
}

ByteView ByteReader::raw(std::size_t n)
{
    if (remaining() < n) throw Error("truncated input");
    ByteView v = data_.subspan(pos_, n);
    pos_ += n;
    return v;
}

std::uint8_t ByteReader::u8()
{
    return raw(1)[0];
}

std::uint32_t ByteReader::u32()
{
    std::uint32_t v = 0;
    for (std::uint8_t b : raw(4)) v = (v << 8) | b;
    return v;
}

std::uint64_t ByteReader::u64()
{
    std::uint64_t v = 0;
    for (std::uint8_t b : raw(8)) v = (v << 8) | b;
    return v;
}

ByteView ByteReader::field()
{
    return raw(u32());
}

std::string ByteReader::string_field()
{
    ByteView v = field();
    return {v.begin(), v.end()};
}

void write_u64_le(Bytes& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t read_u64_le(ByteView in)
{
    if (in.size() < 8) throw Error("truncated input");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | in[i];
    return v;
}

void DeterministicRng::fill(std::span<std::uint8_t> out)
{
    std::size_t i = 0;
    while (i < out.size()) {
        std::uint64_t word = engine_();
        for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
            out[i] = static_cast<std::uint8_t>(word >> (8 * b));
        }
    }
}

Seed Seed::generate(DeterministicRng& rng)
{
    Seed s;
    rng.fill(s.bytes);
    return s;
}

Seed Seed::from(ByteView src)
{
    Seed s;
    static_cast<FixedBytes<32, SeedTag>&>(s) = FixedBytes<32, SeedTag>::from(src);
    return s;
}

Digest hash(ByteView data)
{
    ensure_sodium();
    Digest d;
    crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
    return d;
}

Digest hash(ByteView a, ByteView b)
{
    ensure_sodium();
    crypto_hash_sha256_state st;
    crypto_hash_sha256_init(&st);
    crypto_hash_sha256_update(&st, a.data(), a.size());
    crypto_hash_sha256_update(&st, b.data(), b.size());
    Digest d;
    crypto_hash_sha256_final(&st, d.bytes.data());
    return d;
}

Digest prf(const Seed& seed, std::uint64_t index)
{
    if (index == 0) throw Error("prf index must be >= 1");
    Bytes be = ByteWriter{}.u64(index).take();
    return hash(seed.view(), be);
}

OtpValue truncate_to_otp(const Digest& d)
{
    OtpValue v;
    std::copy_n(d.bytes.begin(), OtpValue::size, v.bytes.begin());
    return v;
}

KeyPair KeyPair::generate(DeterministicRng& rng)
{
    std::array<std::uint8_t, crypto_sign_SEEDBYTES> seed{};
    rng.fill(seed);
    return from_seed(seed);
}

KeyPair KeyPair::from_seed(ByteView seed32)
{
    ensure_sodium();
    if (seed32.size() != crypto_sign_SEEDBYTES) throw Error("keypair seed must be 32 bytes");
    KeyPair kp;
    crypto_sign_seed_keypair(kp.public_key.bytes.data(), kp.secret_key.bytes.data(), seed32.data());
    return kp;
}

Signature sign(const SecretKey& sk, ByteView msg)
{
    ensure_sodium();
    Signature sig;
    crypto_sign_detached(sig.bytes.data(), nullptr, msg.data(), msg.size(), sk.bytes.data());
    return sig;
}

bool verify(const PublicKey& pk, ByteView msg, const Signature& sig)
{
    return verify(pk.view(), msg, sig.view());
}

bool verify(ByteView pk, ByteView msg, ByteView sig)
{
    ensure_sodium();
    if (pk.size() != crypto_sign_PUBLICKEYBYTES || sig.size() != crypto_sign_BYTES) return false;
    return crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(), pk.data()) == 0;
}

}  // namespace otpchain
