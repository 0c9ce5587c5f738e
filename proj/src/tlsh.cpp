#include <hashclust/error.hpp>
#include <hashclust/tlsh.hpp>

#include <algorithm>
#include <cmath>

namespace hashclust {

namespace {

constexpr std::size_t window_size = 5;
constexpr std::size_t code_bytes = tlsh_buckets / 4;

// Pearson permutation of 0..255 used by the reference implementation.
constexpr std::array<std::uint8_t, 256> pearson_table = {
    1,   87,  49,  12,  176, 178, 102, 166, 121, 193, 6,   84,  249, 230, 44,  163,
    14,  197, 213, 181, 161, 85,  218, 80,  64,  239, 24,  226, 236, 142, 38,  200,
    110, 177, 104, 103, 141, 253, 255, 50,  77,  101, 81,  18,  45,  96,  31,  222,
    25,  107, 190, 70,  86,  237, 240, 34,  72,  242, 20,  214, 244, 227, 149, 235,
    97,  234, 57,  22,  60,  250, 82,  175, 208, 5,   127, 199, 111, 62,  135, 248,
    174, 169, 211, 58,  66,  154, 106, 195, 245, 171, 17,  187, 182, 179, 0,   243,
    132, 56,  148, 75,  128, 133, 158, 100, 130, 126, 91,  13,  153, 246, 216, 219,
    119, 68,  223, 78,  83,  88,  201, 99,  122, 11,  92,  32,  136, 114, 52,  10,
    138, 30,  48,  183, 156, 35,  61,  26,  143, 74,  251, 94,  129, 162, 63,  152,
    170, 7,   115, 167, 241, 206, 3,   150, 55,  59,  151, 220, 90,  53,  23,  131,
    125, 173, 15,  238, 79,  95,  89,  16,  105, 137, 225, 224, 217, 160, 37,  123,
    118, 73,  2,   157, 46,  116, 9,   145, 134, 228, 207, 212, 202, 215, 69,  229,
    27,  188, 67,  124, 168, 252, 42,  4,   29,  108, 21,  247, 19,  205, 39,  203,
    233, 40,  186, 147, 198, 192, 155, 33,  164, 191, 98,  204, 165, 180, 117, 76,
    140, 36,  210, 172, 41,  54,  159, 8,   185, 232, 113, 196, 231, 47,  146, 120,
    51,  65,  28,  144, 254, 221, 93,  189, 194, 139, 112, 43,  71,  109, 184, 209,
};

constexpr std::uint8_t pearson(std::uint8_t salt, std::uint8_t a, std::uint8_t b, std::uint8_t c) {
    std::uint8_t h = pearson_table[salt];
    h = pearson_table[h ^ a];
    h = pearson_table[h ^ b];
    return pearson_table[h ^ c];
}

constexpr std::uint8_t swap_nibbles(std::uint8_t b) {
    return static_cast<std::uint8_t>((b >> 4) | (b << 4));
}

int modular_distance(int x, int y, int range) {
    const int d = std::abs(x - y);
    return std::min(d, range - d);
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

std::uint8_t tlsh_length_code(std::uint64_t length) {
    // Single-precision log reproduces the reference boundary table exactly.
    const float lf = std::log(static_cast<float>(length));
    int code = 0;
    if (length <= 656) {
        code = static_cast<int>(std::floor(lf / 0.4054651));
    } else if (length <= 3199) {
        code = static_cast<int>(std::floor(lf / 0.26236426 - 8.72777));
    } else {
        code = static_cast<int>(std::floor(lf / 0.095310180 - 62.5472));
    }
    return static_cast<std::uint8_t>(std::clamp(code, 0, 169));
}

tlsh_digest tlsh_hash(byte_view data) {
    if (data.size() < tlsh_min_length) {
        throw error(errc::too_short, "tlsh_hash: input shorter than 50 bytes");
    }

    std::array<std::uint32_t, 256> counts{};
    std::uint8_t checksum = 0;

    for (std::size_t i = window_size - 1; i < data.size(); ++i) {
        const std::uint8_t b0 = data[i];
        const std::uint8_t b1 = data[i - 1];
        const std::uint8_t b2 = data[i - 2];
        const std::uint8_t b3 = data[i - 3];
        const std::uint8_t b4 = data[i - 4];

        checksum = pearson(0, b0, b1, checksum);
        ++counts[pearson(2, b0, b1, b2)];
        ++counts[pearson(3, b0, b1, b3)];
        ++counts[pearson(5, b0, b2, b3)];
        ++counts[pearson(7, b0, b2, b4)];
        ++counts[pearson(11, b0, b1, b4)];
        ++counts[pearson(13, b0, b3, b4)];
    }

    std::array<std::uint32_t, tlsh_buckets> sorted{};
    std::copy_n(counts.begin(), tlsh_buckets, sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    const std::uint32_t q1 = sorted[tlsh_buckets / 4 - 1];
    const std::uint32_t q2 = sorted[tlsh_buckets / 2 - 1];
    const std::uint32_t q3 = sorted[tlsh_buckets - tlsh_buckets / 4 - 1];

    const auto populated = std::count_if(counts.begin(), counts.begin() + tlsh_buckets,
                                         [](std::uint32_t c) { return c > 0; });
    if (q3 == 0 || populated <= static_cast<std::ptrdiff_t>(tlsh_buckets / 2)) {
        throw error(errc::degenerate_input, "tlsh_hash: input lacks byte diversity");
    }

    tlsh_digest out;
    for (std::size_t b = 0; b < tlsh_buckets; ++b) {
        const std::uint32_t k = counts[b];
        out.body[b] = k > q3 ? 3 : k > q2 ? 2 : k > q1 ? 1 : 0;
    }
    out.checksum = checksum;
    out.l_value = tlsh_length_code(data.size());
    out.q1_ratio = static_cast<std::uint8_t>(
        static_cast<std::uint32_t>(static_cast<float>(q1 * 100) / static_cast<float>(q3)) % 16);
    out.q2_ratio = static_cast<std::uint8_t>(
        static_cast<std::uint32_t>(static_cast<float>(q2 * 100) / static_cast<float>(q3)) % 16);
    return out;
}

int tlsh_distance(const tlsh_digest& a, const tlsh_digest& b) {
    int diff = 0;

    const int ldiff = modular_distance(a.l_value, b.l_value, 256);
    diff += ldiff <= 1 ? ldiff : ldiff * 12;

    for (auto [x, y] : {std::pair{a.q1_ratio, b.q1_ratio}, std::pair{a.q2_ratio, b.q2_ratio}}) {
        const int qdiff = modular_distance(x, y, 16);
        diff += qdiff <= 1 ? qdiff : (qdiff - 1) * 12;
    }

    if (a.checksum != b.checksum) {
        diff += 1;
    }

    for (std::size_t i = 0; i < tlsh_buckets; ++i) {
        const int d = std::abs(a.body[i] - b.body[i]);
        diff += d == 3 ? 6 : d;
    }
    return diff;
}

std::string to_string(const tlsh_digest& digest) {
    std::array<std::uint8_t, tlsh_hex_length / 2> raw{};
    raw[0] = swap_nibbles(digest.checksum);
    raw[1] = swap_nibbles(digest.l_value);
    raw[2] = static_cast<std::uint8_t>((digest.q1_ratio << 4) | digest.q2_ratio);
    for (std::size_t i = 0; i < code_bytes; ++i) {
        std::uint8_t packed = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            packed |= static_cast<std::uint8_t>(digest.body[4 * i + j] << (2 * j));
        }
        raw[3 + code_bytes - 1 - i] = packed;
    }

    constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(tlsh_hex_length);
    for (std::uint8_t b : raw) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0x0f]);
    }
    return out;
}

tlsh_digest parse_tlsh(std::string_view text) {
    for (std::size_t i = 0; i < text.size() && i < tlsh_hex_length; ++i) {
        if (hex_value(text[i]) < 0) {
            throw malformed_digest(i, "tlsh digest: non-hex character");
        }
    }
    if (text.size() != tlsh_hex_length) {
        throw malformed_digest(std::min(text.size(), tlsh_hex_length),
                               "tlsh digest: expected 70 hex characters, got " +
                                   std::to_string(text.size()));
    }

    std::array<std::uint8_t, tlsh_hex_length / 2> raw{};
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw[i] = static_cast<std::uint8_t>(hex_value(text[2 * i]) << 4 | hex_value(text[2 * i + 1]));
    }

    tlsh_digest out;
    out.checksum = swap_nibbles(raw[0]);
    out.l_value = swap_nibbles(raw[1]);
    out.q1_ratio = raw[2] >> 4;
    out.q2_ratio = raw[2] & 0x0f;
    for (std::size_t i = 0; i < code_bytes; ++i) {
        const std::uint8_t packed = raw[3 + code_bytes - 1 - i];
        for (std::size_t j = 0; j < 4; ++j) {
            out.body[4 * i + j] = (packed >> (2 * j)) & 0x03;
        }
    }
    return out;
}

} // namespace hashclust
