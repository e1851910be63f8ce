#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "otpchain/bytes.hpp"

namespace otpchain {

/// Ordered words from the 2048-entry list; 11 bits per word, with
/// payload_bits/32 checksum bits taken from the front of SHA-256(payload).
/// A 16-byte payload encodes to 12 words and a 32-byte payload to 24.
struct Mnemonic {
    std::vector<std::string> words;

    std::string to_string() const;
    /// Splits on whitespace and lowercases each word.
    static Mnemonic parse(std::string_view text);

    bool operator==(const Mnemonic&) const = default;
};

class MnemonicError : public Error {
public:
    enum class Kind { bad_payload_length, wrong_word_count, unknown_word, checksum_mismatch };

    MnemonicError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// The compiled-in list (version 1 of the shipped list, the standard English
/// BIP-39 words).
const std::array<std::string_view, 2048>& wordlist();

/// Loads and validates a word list file: exactly 2048 lines, ASCII,
/// strictly sorted, one word per line.
std::vector<std::string> load_wordlist(const std::filesystem::path& path);

Mnemonic mnemonic_encode(ByteView payload);
Bytes mnemonic_decode(const Mnemonic& m);

}  // namespace otpchain
