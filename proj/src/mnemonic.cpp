#include "otpchain/mnemonic.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "otpchain/crypto.hpp"

namespace otpchain {

namespace detail {
extern const std::array<std::string_view, 2048> kEnglishWords;
}

namespace {

constexpr int kBitsPerWord = 11;

bool bit_at(ByteView data, std::size_t i)
{
    return (data[i / 8] >> (7 - i % 8)) & 1;
}

std::size_t payload_bytes_for_words(std::size_t words)
{
    // 12 words <-> 16 bytes, 24 words <-> 32 bytes.
    if (words == 12) return 16;
    if (words == 24) return 32;
    return 0;
}

}  // namespace

const std::array<std::string_view, 2048>& wordlist()
{
    return detail::kEnglishWords;
}

std::vector<std::string> load_wordlist(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open word list " + path.string());
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || !std::all_of(line.begin(), line.end(), [](unsigned char c) { return c > 0x20 && c < 0x7f; })) {
            throw Error("word list line " + std::to_string(words.size() + 1) + " is not a single ASCII word");
        }
        if (!words.empty() && !(words.back() < line)) {
            throw Error("word list is not strictly sorted at line " + std::to_string(words.size() + 1));
        }
        words.push_back(line);
    }
    if (words.size() != 2048) throw Error("word list has " + std::to_string(words.size()) + " words, expected 2048");
    return words;
}

std::string Mnemonic::to_string() const
{
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out.push_back(' ');
        out += w;
    }
    return out;
}

Mnemonic Mnemonic::parse(std::string_view text)
{
    Mnemonic m;
    std::istringstream in{std::string(text)};
    std::string w;
    while (in >> w) {
        std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
        m.words.push_back(w);
    }
    return m;
}

Mnemonic mnemonic_encode(ByteView payload)
{
    if (payload.size() != 16 && payload.size() != 32) {
        throw MnemonicError(MnemonicError::Kind::bad_payload_length,
                            "mnemonic payload must be 16 or 32 bytes, got " + std::to_string(payload.size()));
    }
    const std::size_t payload_bits = payload.size() * 8;
    const std::size_t checksum_bits = payload_bits / 32;
    const Digest check = hash(payload);

    Bytes bits(payload.begin(), payload.end());
    bits.push_back(check.bytes[0]);

    Mnemonic m;
    const std::size_t total = payload_bits + checksum_bits;
    for (std::size_t start = 0; start < total; start += kBitsPerWord) {
        unsigned idx = 0;
        for (int b = 0; b < kBitsPerWord; ++b) idx = (idx << 1) | bit_at(bits, start + b);
        m.words.emplace_back(wordlist()[idx]);
    }
    return m;
}

Bytes mnemonic_decode(const Mnemonic& m)
{
    const std::size_t nbytes = payload_bytes_for_words(m.words.size());
    if (nbytes == 0) {
        throw MnemonicError(MnemonicError::Kind::wrong_word_count,
                            "mnemonic must have 12 or 24 words, got " + std::to_string(m.words.size()));
    }
    const auto& list = wordlist();

    // One extra byte holds the (at most 8) checksum bits.
    Bytes bits(nbytes + 1, 0);
    std::size_t pos = 0;
    for (const auto& w : m.words) {
        auto it = std::lower_bound(list.begin(), list.end(), std::string_view(w));
        if (it == list.end() || *it != w) {
            throw MnemonicError(MnemonicError::Kind::unknown_word, "unknown mnemonic word '" + w + "'");
        }
        auto idx = static_cast<unsigned>(it - list.begin());
        for (int b = kBitsPerWord - 1; b >= 0; --b, ++pos) {
            if ((idx >> b) & 1) bits[pos / 8] |= static_cast<std::uint8_t>(0x80 >> (pos % 8));
        }
    }

    Bytes payload(bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>(nbytes));
    const std::size_t checksum_bits = nbytes * 8 / 32;
    const std::uint8_t mask = static_cast<std::uint8_t>(0xff << (8 - checksum_bits));
    if ((bits[nbytes] & mask) != (hash(payload).bytes[0] & mask)) {
        throw MnemonicError(MnemonicError::Kind::checksum_mismatch, "mnemonic checksum mismatch");
    }
    return payload;
}

}  // namespace otpchain
