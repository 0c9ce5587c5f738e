#pragma once

// Writer for small, inert PE32/PE32+ DLL images with a chosen import table.
// Images have no code: the entry point is 0 and no section is executable.

#include <hashclust/bytes.hpp>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace hashclust {

struct pe_import_spec {
    std::string dll;
    std::vector<std::variant<std::string, std::uint16_t>> symbols; // name or ordinal
};

struct pe_image_spec {
    bool pe32_plus = false;
    std::vector<pe_import_spec> imports; // empty: no import directory
    byte_buffer payload;                 // contents of the .data section
    std::vector<byte_buffer> extra_sections;
    std::uint32_t timestamp = 0; // COFF TimeDateStamp
};

byte_buffer build_pe(const pe_image_spec& spec);

} // namespace hashclust
