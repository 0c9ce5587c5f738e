#pragma once

// Context-triggered piecewise hashing, digest-compatible with ssdeep/libfuzzy.

#include <hashclust/bytes.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace hashclust {

inline constexpr std::uint32_t ssdeep_min_block_size = 3;
inline constexpr std::size_t ssdeep_rolling_window = 7;
inline constexpr std::size_t ssdeep_signature_length = 64;

struct ssdeep_digest {
    std::uint32_t block_size = ssdeep_min_block_size; // always 3 * 2^n
    std::string coarse;                               // pieces at block_size, <= 64 chars
    std::string fine;                                 // pieces at 2 * block_size, <= 32 chars

    bool operator==(const ssdeep_digest&) const = default;
};

/// Throws `error{errc::empty_input}` for an empty buffer.
ssdeep_digest ssdeep_hash(byte_view data);

/// Similarity score in [0, 100]; 100 for identical digests, 0 when the block
/// sizes are more than a factor of two apart or no 7-character run is shared.
int ssdeep_compare(const ssdeep_digest& a, const ssdeep_digest& b);

/// "block_size:coarse:fine"
std::string to_string(const ssdeep_digest& digest);

/// Inverse of `to_string`. Throws `malformed_digest` on bad input.
ssdeep_digest parse_ssdeep(std::string_view text);

/// Index of `c` in the base64 alphabet used by signatures, or -1.
int ssdeep_alphabet_index(char c) noexcept;

} // namespace hashclust
