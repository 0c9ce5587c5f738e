#include <hashclust/error.hpp>
#include <hashclust/pe_builder.hpp>

#include <cstring>

namespace hashclust {

namespace {

constexpr std::uint32_t file_alignment = 0x200;
constexpr std::uint32_t section_alignment = 0x1000;
constexpr std::uint32_t lfanew = 0x40;
constexpr std::uint32_t scn_initialized_data = 0x00000040;
constexpr std::uint32_t scn_mem_read = 0x40000000;
constexpr std::uint32_t scn_mem_write = 0x80000000;

std::uint32_t align_up(std::uint32_t v, std::uint32_t a) {
    return (v + a - 1) / a * a;
}

class image_writer {
public:
    void put(std::size_t at, std::uint64_t value, std::size_t width) {
        if (buf_.size() < at + width) {
            buf_.resize(at + width, 0);
        }
        for (std::size_t i = 0; i < width; ++i) {
            buf_[at + i] = static_cast<std::uint8_t>(value >> (8 * i));
        }
    }
    void put_bytes(std::size_t at, byte_view bytes) {
        if (buf_.size() < at + bytes.size()) {
            buf_.resize(at + bytes.size(), 0);
        }
        std::copy(bytes.begin(), bytes.end(), buf_.begin() + static_cast<std::ptrdiff_t>(at));
    }
    void pad_to(std::size_t size) {
        if (buf_.size() < size) {
            buf_.resize(size, 0);
        }
    }
    byte_buffer take() { return std::move(buf_); }

private:
    byte_buffer buf_;
};

struct section_plan {
    std::string name;
    byte_buffer data;
    std::uint32_t characteristics;
    std::uint32_t rva = 0;
    std::uint32_t raw_offset = 0;
};

// Lays out descriptors, lookup tables, address tables, hint/name entries and
// module names inside one section starting at `base_rva`.
byte_buffer build_import_section(const std::vector<pe_import_spec>& imports, bool wide,
                                 std::uint32_t base_rva, std::uint32_t& iat_rva,
                                 std::uint32_t& iat_size, std::uint32_t& dir_size) {
    const std::size_t thunk = wide ? 8 : 4;
    std::size_t thunk_slots = 0;
    for (const auto& imp : imports) {
        thunk_slots += imp.symbols.size() + 1;
    }
    const std::size_t desc_bytes = (imports.size() + 1) * 20;
    const std::size_t ilt_at = desc_bytes;
    const std::size_t iat_at = ilt_at + thunk_slots * thunk;
    std::size_t strings_at = iat_at + thunk_slots * thunk;

    image_writer w;
    w.pad_to(strings_at);
    std::size_t slot = 0;
    for (std::size_t d = 0; d < imports.size(); ++d) {
        const auto& imp = imports[d];
        const std::size_t first_slot = slot;
        for (const auto& sym : imp.symbols) {
            std::uint64_t value = 0;
            if (const auto* ord = std::get_if<std::uint16_t>(&sym)) {
                value = (wide ? (std::uint64_t{1} << 63) : (std::uint64_t{1} << 31)) | *ord;
            } else {
                const auto& name = std::get<std::string>(sym);
                value = base_rva + strings_at;
                w.put(strings_at, 0, 2);
                w.put_bytes(strings_at + 2, as_bytes(name));
                w.put(strings_at + 2 + name.size(), 0, 1);
                strings_at = (strings_at + 3 + name.size() + 1) & ~std::size_t{1};
            }
            w.put(ilt_at + slot * thunk, value, thunk);
            w.put(iat_at + slot * thunk, value, thunk);
            ++slot;
        }
        ++slot; // null terminator slot

        const std::size_t name_at = strings_at;
        w.put_bytes(name_at, as_bytes(imp.dll));
        w.put(name_at + imp.dll.size(), 0, 1);
        strings_at = (name_at + imp.dll.size() + 2) & ~std::size_t{1};

        const std::size_t desc = d * 20;
        w.put(desc, base_rva + ilt_at + first_slot * thunk, 4);
        w.put(desc + 12, base_rva + name_at, 4);
        w.put(desc + 16, base_rva + iat_at + first_slot * thunk, 4);
    }
    w.pad_to(strings_at);
    iat_rva = static_cast<std::uint32_t>(base_rva + iat_at);
    iat_size = static_cast<std::uint32_t>(thunk_slots * thunk);
    dir_size = static_cast<std::uint32_t>(desc_bytes);
    return w.take();
}

} // namespace

byte_buffer build_pe(const pe_image_spec& spec) {
    const bool wide = spec.pe32_plus;
    const std::uint32_t optional_size = wide ? 240 : 224;

    std::vector<section_plan> sections;
    const bool has_imports = !spec.imports.empty();
    if (has_imports) {
        sections.push_back({".rdata", {}, scn_initialized_data | scn_mem_read});
    }
    sections.push_back({".data", spec.payload, scn_initialized_data | scn_mem_read | scn_mem_write});
    for (std::size_t i = 0; i < spec.extra_sections.size(); ++i) {
        sections.push_back({".rsrc" + std::to_string(i), spec.extra_sections[i],
                            scn_initialized_data | scn_mem_read});
    }
    if (sections.size() > 0xffff) {
        throw error(errc::invalid_argument, "too many sections");
    }

    const std::uint32_t section_table = lfanew + 24 + optional_size;
    const std::uint32_t headers_size =
        align_up(section_table + 40 * static_cast<std::uint32_t>(sections.size()), file_alignment);

    std::uint32_t import_rva = 0, import_size = 0, iat_rva = 0, iat_size = 0;
    std::uint32_t rva = align_up(headers_size, section_alignment);
    std::uint32_t raw = headers_size;
    for (auto& s : sections) {
        s.rva = rva;
        if (has_imports && &s == &sections.front()) {
            s.data = build_import_section(spec.imports, wide, rva, iat_rva, iat_size, import_size);
            import_rva = rva;
        }
        s.raw_offset = raw;
        const auto len = static_cast<std::uint32_t>(s.data.size());
        raw += align_up(len, file_alignment);
        rva += align_up(std::max<std::uint32_t>(len, 1), section_alignment);
    }
    const std::uint32_t image_size = rva;

    image_writer w;
    w.put(0, 'M', 1);
    w.put(1, 'Z', 1);
    w.put(0x3c, lfanew, 4);
    w.put_bytes(lfanew, as_bytes(std::string_view("PE\0\0", 4)));

    const std::uint32_t coff = lfanew + 4;
    w.put(coff, wide ? 0x8664 : 0x14c, 2);
    w.put(coff + 2, sections.size(), 2);
    w.put(coff + 4, spec.timestamp, 4);
    w.put(coff + 16, optional_size, 2);
    w.put(coff + 18, wide ? 0x2022 : 0x2102, 2);

    const std::uint32_t opt = coff + 20;
    std::uint32_t init_data = 0;
    for (const auto& s : sections) {
        init_data += align_up(static_cast<std::uint32_t>(s.data.size()), file_alignment);
    }
    w.put(opt, wide ? 0x20b : 0x10b, 2);
    w.put(opt + 2, 14, 1);
    w.put(opt + 8, init_data, 4);
    if (wide) {
        w.put(opt + 24, 0x180000000ULL, 8);
    } else {
        w.put(opt + 24, sections.front().rva, 4); // BaseOfData
        w.put(opt + 28, 0x10000000, 4);
    }
    w.put(opt + 32, section_alignment, 4);
    w.put(opt + 36, file_alignment, 4);
    w.put(opt + 40, 6, 2);
    w.put(opt + 48, 6, 2);
    w.put(opt + 56, image_size, 4);
    w.put(opt + 60, headers_size, 4);
    w.put(opt + 68, 3, 2);
    w.put(opt + 70, 0x0140, 2);
    const std::size_t word = wide ? 8 : 4;
    const std::uint32_t stacks = opt + 72;
    w.put(stacks, 0x100000, word);
    w.put(stacks + word, 0x1000, word);
    w.put(stacks + 2 * word, 0x100000, word);
    w.put(stacks + 3 * word, 0x1000, word);
    const std::uint32_t rva_count_at = wide ? opt + 108 : opt + 92;
    const std::uint32_t dirs = wide ? opt + 112 : opt + 96;
    w.put(rva_count_at, 16, 4);
    w.put(dirs + 8, import_rva, 4);
    w.put(dirs + 12, import_size, 4);
    w.put(dirs + 12 * 8, iat_rva, 4);
    w.put(dirs + 12 * 8 + 4, iat_size, 4);

    for (std::size_t i = 0; i < sections.size(); ++i) {
        const auto& s = sections[i];
        const std::uint32_t at = section_table + 40 * static_cast<std::uint32_t>(i);
        w.put_bytes(at, as_bytes(std::string_view(s.name).substr(0, 8)));
        const auto len = static_cast<std::uint32_t>(s.data.size());
        w.put(at + 8, len, 4);
        w.put(at + 12, s.rva, 4);
        w.put(at + 16, align_up(len, file_alignment), 4);
        w.put(at + 20, s.raw_offset, 4);
        w.put(at + 36, s.characteristics, 4);
    }
    w.pad_to(headers_size);
    for (const auto& s : sections) {
        w.put_bytes(s.raw_offset, s.data);
        w.pad_to(s.raw_offset + align_up(static_cast<std::uint32_t>(s.data.size()), file_alignment));
    }
    return w.take();
}

} // namespace hashclust
