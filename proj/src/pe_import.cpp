#include <hashclust/crypto.hpp>
#include <hashclust/error.hpp>
#include <hashclust/pe_import.hpp>

#include <algorithm>
#include <optional>

namespace hashclust {

namespace {

constexpr std::uint16_t pe32_magic = 0x10b;
constexpr std::uint16_t pe32plus_magic = 0x20b;
constexpr std::size_t max_descriptors = 4096;
constexpr std::size_t max_thunks = 65536;
constexpr std::size_t max_name_length = 4096;

[[noreturn]] void truncated(const std::string& what) {
    throw error(errc::truncated_file, "truncated PE: " + what);
}

// Little-endian reads; every access is bounds-checked against the buffer.
class byte_reader {
public:
    explicit byte_reader(byte_view data) : data_(data) {}

    bool has(std::uint64_t offset, std::uint64_t count) const {
        return offset <= data_.size() && count <= data_.size() - offset;
    }

    template <typename T>
    T read(std::uint64_t offset, const char* what) const {
        if (!has(offset, sizeof(T))) {
            truncated(what);
        }
        T value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            value |= static_cast<T>(static_cast<T>(data_[offset + i]) << (8 * i));
        }
        return value;
    }

    std::string c_string(std::uint64_t offset, const char* what) const {
        std::string out;
        for (std::uint64_t i = offset; i < data_.size(); ++i) {
            if (data_[i] == 0) {
                return out;
            }
            if (out.size() >= max_name_length) {
                break;
            }
            out.push_back(static_cast<char>(data_[i]));
        }
        truncated(what);
    }

    std::size_t size() const { return data_.size(); }

private:
    byte_view data_;
};

struct section {
    std::uint32_t virtual_address;
    std::uint32_t extent;
    std::uint32_t raw_offset;
};

class image_map {
public:
    image_map(std::vector<section> sections, std::uint32_t headers_size)
        : sections_(std::move(sections)), headers_size_(headers_size) {}

    std::uint64_t offset_of(std::uint32_t rva, const char* what) const {
        for (const auto& s : sections_) {
            if (rva >= s.virtual_address && rva - s.virtual_address < s.extent) {
                return std::uint64_t{rva} - s.virtual_address + s.raw_offset;
            }
        }
        if (rva < headers_size_) {
            return rva;
        }
        truncated(what);
    }

private:
    std::vector<section> sections_;
    std::uint32_t headers_size_;
};

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](char c) {
        return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    });
    std::replace(out.begin(), out.end(), ',', '_');
    return out;
}

} // namespace

import_entry normalize_import(std::string_view dll, std::string_view symbol) {
    std::string module = ascii_lower(dll);
    if (const auto dot = module.rfind('.'); dot != std::string::npos) {
        const std::string_view ext = std::string_view(module).substr(dot + 1);
        if (ext == "dll" || ext == "ocx" || ext == "sys") {
            module.erase(dot);
        }
    }
    return {std::move(module), ascii_lower(symbol)};
}

import_table parse_imports(byte_view data) {
    const byte_reader in(data);
    if (data.size() < 64 || data[0] != 'M' || data[1] != 'Z') {
        throw error(errc::not_pe, "missing MZ header");
    }
    const std::uint32_t pe_offset = in.read<std::uint32_t>(0x3c, "e_lfanew");
    if (!in.has(pe_offset, 4) || data[pe_offset] != 'P' || data[pe_offset + 1] != 'E' ||
        data[pe_offset + 2] != 0 || data[pe_offset + 3] != 0) {
        throw error(errc::not_pe, "missing PE signature");
    }

    const std::uint64_t coff = std::uint64_t{pe_offset} + 4;
    const auto section_count = in.read<std::uint16_t>(coff + 2, "COFF header");
    const auto optional_size = in.read<std::uint16_t>(coff + 16, "COFF header");
    const std::uint64_t optional = coff + 20;

    const auto magic = in.read<std::uint16_t>(optional, "optional header");
    if (magic != pe32_magic && magic != pe32plus_magic) {
        throw error(errc::not_pe, "unknown optional header magic");
    }
    const bool wide = magic == pe32plus_magic;
    const std::uint64_t rva_count_at = optional + (wide ? 108 : 92);
    const std::uint64_t directories = optional + (wide ? 112 : 96);

    const auto file_alignment = in.read<std::uint32_t>(optional + 36, "optional header");
    const auto headers_size = in.read<std::uint32_t>(optional + 60, "optional header");
    const auto rva_count = in.read<std::uint32_t>(rva_count_at, "optional header");
    if (rva_count < 2 || directories + 16 > optional + optional_size) {
        throw error(errc::no_import_table, "no import directory entry");
    }
    const auto import_rva = in.read<std::uint32_t>(directories + 8, "data directory");
    const auto import_size = in.read<std::uint32_t>(directories + 12, "data directory");
    if (import_rva == 0 || import_size == 0) {
        throw error(errc::no_import_table, "import directory is empty");
    }

    std::vector<section> sections;
    const std::uint64_t section_table = optional + optional_size;
    for (std::size_t i = 0; i < section_count; ++i) {
        const std::uint64_t at = section_table + 40 * i;
        const auto vsize = in.read<std::uint32_t>(at + 8, "section table");
        const auto va = in.read<std::uint32_t>(at + 12, "section table");
        const auto raw_size = in.read<std::uint32_t>(at + 16, "section table");
        auto raw_ptr = in.read<std::uint32_t>(at + 20, "section table");
        if (file_alignment >= 0x200) {
            raw_ptr &= ~std::uint32_t{0x1ff};
        }
        sections.push_back({va, std::max(vsize, raw_size), raw_ptr});
    }
    const image_map image(std::move(sections), headers_size);

    import_table table;
    const std::uint64_t thunk_size = wide ? 8 : 4;
    const std::uint64_t ordinal_flag = wide ? (std::uint64_t{1} << 63) : (std::uint64_t{1} << 31);

    std::uint64_t desc = image.offset_of(import_rva, "import directory");
    for (std::size_t d = 0; d < max_descriptors; ++d, desc += 20) {
        const auto lookup_rva = in.read<std::uint32_t>(desc, "import descriptor");
        const auto name_rva = in.read<std::uint32_t>(desc + 12, "import descriptor");
        const auto address_rva = in.read<std::uint32_t>(desc + 16, "import descriptor");
        if (lookup_rva == 0 && name_rva == 0 && address_rva == 0) {
            break;
        }
        if (name_rva == 0) {
            continue;
        }
        const std::string dll = in.c_string(image.offset_of(name_rva, "module name"), "module name");
        const std::uint32_t thunk_rva = lookup_rva != 0 ? lookup_rva : address_rva;
        if (thunk_rva == 0) {
            continue;
        }

        std::uint64_t thunk = image.offset_of(thunk_rva, "import lookup table");
        for (std::size_t t = 0; t < max_thunks; ++t, thunk += thunk_size) {
            const std::uint64_t value = wide ? in.read<std::uint64_t>(thunk, "import thunk")
                                             : in.read<std::uint32_t>(thunk, "import thunk");
            if (value == 0) {
                break;
            }
            if (value & ordinal_flag) {
                table.entries.push_back(
                    normalize_import(dll, "ord" + std::to_string(value & 0xffff)));
                continue;
            }
            const auto hint_name = image.offset_of(static_cast<std::uint32_t>(value & 0x7fffffff),
                                                   "hint/name entry");
            table.entries.push_back(
                normalize_import(dll, in.c_string(hint_name + 2, "import name")));
        }
    }

    if (table.entries.empty()) {
        throw error(errc::no_import_table, "import directory lists no symbols");
    }
    return table;
}

std::string imphash::hex() const {
    return to_hex(digest);
}

imphash compute_imphash(const import_table& table) {
    if (table.entries.empty()) {
        throw error(errc::empty_table, "imphash of an empty import table");
    }
    std::string joined;
    for (const auto& e : table.entries) {
        if (!joined.empty()) {
            joined.push_back(',');
        }
        joined += e.dll;
        joined.push_back('.');
        joined += e.symbol;
    }
    return {md5(as_bytes(joined))};
}

std::set<std::string> import_set(const import_table& table) {
    std::set<std::string> out;
    for (const auto& e : table.entries) {
        out.insert(e.dll + "." + e.symbol);
    }
    return out;
}

imphash parse_imphash(std::string_view text) {
    imphash out;
    for (std::size_t i = 0; i < text.size() && i < 32; ++i) {
        const char c = text[i];
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F'))) {
            throw malformed_digest(i, "imphash: non-hex character");
        }
    }
    if (text.size() != 32) {
        throw malformed_digest(std::min<std::size_t>(text.size(), 32),
                               "imphash: expected 32 hex characters");
    }
    auto nibble = [](char c) {
        return c <= '9' ? c - '0' : (c | 0x20) - 'a' + 10;
    };
    for (std::size_t i = 0; i < 16; ++i) {
        out.digest[i] = static_cast<std::uint8_t>(nibble(text[2 * i]) << 4 | nibble(text[2 * i + 1]));
    }
    return out;
}

} // namespace hashclust
