#pragma once

// Trend Micro locality-sensitive hash (128 buckets, 1-byte checksum).

#include <hashclust/bytes.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace hashclust {

inline constexpr std::size_t tlsh_min_length = 50;
inline constexpr std::size_t tlsh_buckets = 128;
inline constexpr std::size_t tlsh_hex_length = 70;

struct tlsh_digest {
    std::uint8_t checksum = 0;
    std::uint8_t l_value = 0;  // log-scaled input length
    std::uint8_t q1_ratio = 0; // (q1 * 100 / q3) mod 16
    std::uint8_t q2_ratio = 0; // (q2 * 100 / q3) mod 16
    std::array<std::uint8_t, tlsh_buckets> body{}; // quartile code 0..3, indexed by bucket

    bool operator==(const tlsh_digest&) const = default;
};

/// Throws `error{errc::too_short}` below 50 bytes and
/// `error{errc::degenerate_input}` when the bucket counts have no usable
/// quartile spread (q3 == 0 or at most half the buckets populated).
tlsh_digest tlsh_hash(byte_view data);

/// 0 iff the digests are identical; larger means more dissimilar.
int tlsh_distance(const tlsh_digest& a, const tlsh_digest& b);

/// 70 lowercase hex characters.
std::string to_string(const tlsh_digest& digest);

/// Accepts upper- or lowercase hex. Throws `malformed_digest`.
tlsh_digest parse_tlsh(std::string_view text);

/// Log-bucketed length code stored in the digest header.
std::uint8_t tlsh_length_code(std::uint64_t length);

} // namespace hashclust
