#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polarforge {

/// One bit per byte, values 0 or 1.
using BitBlock = std::vector<std::uint8_t>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline unsigned ilog2(std::size_t n) { return static_cast<unsigned>(std::bit_width(n) - 1); }

inline void require_pow2(std::size_t n, const char* what) {
    if (!is_pow2(n)) throw std::invalid_argument(std::string(what) + ": length must be a power of two");
}

inline void xor_into(BitBlock& dst, const BitBlock& src) {
    if (dst.size() != src.size()) throw std::invalid_argument("xor_into: length mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= src[i];
}

inline BitBlock xor_of(BitBlock a, const BitBlock& b) {
    xor_into(a, b);
    return a;
}

inline std::size_t weight(const BitBlock& b) {
    std::size_t w = 0;
    for (auto v : b) w += v;
    return w;
}

/// Packs bits LSB-first into bytes.
inline std::vector<std::uint8_t> pack_bits(const BitBlock& bits) {
    std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) out[i >> 3] |= static_cast<std::uint8_t>(1u << (i & 7));
    return out;
}

inline BitBlock unpack_bits(const std::uint8_t* bytes, std::size_t nbytes, std::size_t nbits) {
    if (nbits > nbytes * 8) throw std::invalid_argument("unpack_bits: not enough bytes");
    BitBlock out(nbits);
    for (std::size_t i = 0; i < nbits; ++i) out[i] = (bytes[i >> 3] >> (i & 7)) & 1u;
    return out;
}

inline std::string bits_to_hex(const BitBlock& bits) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    for (auto byte : pack_bits(bits)) {
        s.push_back(digits[byte >> 4]);
        s.push_back(digits[byte & 15]);
    }
    return s;
}

inline int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

inline BitBlock hex_to_bits(std::string_view hex, std::size_t nbits) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("hex_to_bits: odd digit count");
    if (hex.size() / 2 != (nbits + 7) / 8) throw std::invalid_argument("hex_to_bits: length does not match bit count");
    std::vector<std::uint8_t> bytes(hex.size() / 2);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        int hi = hex_digit(hex[2 * i]), lo = hex_digit(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("hex_to_bits: bad digit");
        bytes[i] = static_cast<std::uint8_t>(hi * 16 + lo);
    }
    BitBlock out = unpack_bits(bytes.data(), bytes.size(), nbits);
    // padding bits in the last byte must be clear
    if (nbits % 8 != 0 && (bytes.back() >> (nbits % 8)) != 0)
        throw std::invalid_argument("hex_to_bits: nonzero padding");
    return out;
}

/// "<nbits>:<hex>" form used for payload fields.
inline std::string bits_to_prefixed_hex(const BitBlock& bits) {
    return std::to_string(bits.size()) + ":" + bits_to_hex(bits);
}

inline BitBlock prefixed_hex_to_bits(std::string_view s) {
    auto colon = s.find(':');
    if (colon == std::string_view::npos || colon == 0) throw std::invalid_argument("payload field: missing length prefix");
    std::size_t n = 0;
    for (char c : s.substr(0, colon)) {
        if (c < '0' || c > '9') throw std::invalid_argument("payload field: bad length prefix");
        n = n * 10 + static_cast<std::size_t>(c - '0');
    }
    return hex_to_bits(s.substr(colon + 1), n);
}

}  // namespace polarforge
