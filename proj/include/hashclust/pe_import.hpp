#pragma once

// Read-only PE32/PE32+ import directory walker and import hashing.

#include <hashclust/bytes.hpp>

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hashclust {

/// One imported symbol, normalized: lowercase, no commas, and the module name
/// stripped of a trailing ".dll", ".ocx" or ".sys". Ordinal-only imports use
/// the symbol "ord<N>".
struct import_entry {
    std::string dll;
    std::string symbol;

    bool operator==(const import_entry&) const = default;
};

struct import_table {
    std::vector<import_entry> entries; // file order
};

struct imphash {
    std::array<std::uint8_t, 16> digest{};

    std::string hex() const;
    bool operator==(const imphash&) const = default;
    auto operator<=>(const imphash&) const = default;
};

/// Throws `error` with errc::not_pe, errc::no_import_table or
/// errc::truncated_file. Never reads outside `data`.
import_table parse_imports(byte_view data);

/// MD5 over "dll.symbol" entries joined by commas, in table order.
/// Throws `error{errc::empty_table}`.
imphash compute_imphash(const import_table& table);

/// Order-insensitive, deduplicated "dll.symbol" strings.
std::set<std::string> import_set(const import_table& table);

/// Parses a 32-character hex string. Throws `malformed_digest`.
imphash parse_imphash(std::string_view text);

/// Applies the entry normalization rules to raw names as found in a file.
import_entry normalize_import(std::string_view dll, std::string_view symbol);

} // namespace hashclust
