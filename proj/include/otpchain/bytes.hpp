#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace otpchain {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fixed-width byte string. Used as the base for digests, OTPs, keys and seeds
/// so that each domain concept gets its own type.
template <std::size_t N, typename Tag>
struct FixedBytes {
    static constexpr std::size_t size = N;
    std::array<std::uint8_t, N> bytes{};

    ByteView view() const { return {bytes.data(), bytes.size()}; }
    auto operator<=>(const FixedBytes&) const = default;

    static FixedBytes from(ByteView src)
    {
        if (src.size() != N) {
            throw Error("expected " + std::to_string(N) + " bytes, got " + std::to_string(src.size()));
        }
        FixedBytes out;
        std::copy(src.begin(), src.end(), out.bytes.begin());
        return out;
    }
};

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

template <std::size_t N, typename Tag>
std::string to_hex(const FixedBytes<N, Tag>& v)
{
    return to_hex(v.view());
}

template <typename T>
T from_hex_as(std::string_view hex)
{
    return T::from(from_hex(hex));
}

inline ByteView as_bytes(std::string_view s)
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

/// Appends fields in a canonical, length-prefixed layout. All integers are
/// big-endian; variable-length fields carry a 4-byte length prefix.
class ByteWriter {
public:
    ByteWriter& u8(std::uint8_t v);
    ByteWriter& u32(std::uint32_t v);
    ByteWriter& u64(std::uint64_t v);
    ByteWriter& raw(ByteView data);
    ByteWriter& field(ByteView data);
    ByteWriter& field(std::string_view s) { return field(as_bytes(s)); }

    template <std::size_t N, typename Tag>
    ByteWriter& raw(const FixedBytes<N, Tag>& v)
    {
        return raw(v.view());
    }

    const Bytes& bytes() const& { return out_; }
    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

/// Reads back what ByteWriter produced. Throws Error on truncated input.
class ByteReader {
public:
    explicit ByteReader(ByteView data) : data_(data) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    ByteView raw(std::size_t n);
    ByteView field();
    std::string string_field();

    template <typename T>
    T fixed()
    {
        return T::from(raw(T::size));
    }

    bool done() const { return pos_ == data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    ByteView data_;
    std::size_t pos_ = 0;
};

void write_u64_le(Bytes& out, std::uint64_t v);
std::uint64_t read_u64_le(ByteView in);

}  // namespace otpchain
