#include <hashclust/corpus.hpp>
#include <hashclust/crypto.hpp>
#include <hashclust/csv.hpp>
#include <hashclust/error.hpp>
#include <hashclust/pe_builder.hpp>

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

namespace hashclust {

namespace fs = std::filesystem;

std::optional<civil_date> parse_date(std::string_view t) {
    if (t.size() != 10 || t[4] != '-' || t[7] != '-') return std::nullopt;
    auto number = [&](std::size_t at, std::size_t len, unsigned& out) {
        const auto res = std::from_chars(t.data() + at, t.data() + at + len, out);
        return res.ec == std::errc{} && res.ptr == t.data() + at + len;
    };
    unsigned y = 0, m = 0, d = 0;
    if (!number(0, 4, y) || !number(5, 2, m) || !number(8, 2, d)) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year(static_cast<int>(y)), std::chrono::month(m),
                                          std::chrono::day(d)};
    if (!ymd.ok()) return std::nullopt;
    return civil_date{static_cast<int>(y), m, d};
}

std::string to_string(const civil_date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", d.year, d.month, d.day);
    return buf;
}

bool is_sha256_hex(std::string_view text) noexcept {
    return text.size() == 64 && std::all_of(text.begin(), text.end(), [](char c) {
               return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
           });
}

namespace {

std::string lower(std::string s) {
    for (char& c : s) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return s;
}

// Column lookup over a parsed CSV header.
class header_index {
public:
    explicit header_index(const csv::row& header) {
        for (std::size_t i = 0; i < header.size(); ++i) index_.emplace(header[i], i);
    }
    std::size_t require(const std::string& name) const {
        const auto it = index_.find(name);
        if (it == index_.end()) throw error(errc::missing_column, "missing column '" + name + "'");
        return it->second;
    }
    std::optional<std::size_t> find(const std::string& name) const {
        const auto it = index_.find(name);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::map<std::string, std::size_t> index_;
};

sample_record parse_sample(const csv::row& r, std::size_t row_no, std::size_t sha_col,
                           std::size_t family_col, std::size_t first_col, std::size_t last_col) {
    sample_record rec;
    if (!is_sha256_hex(r[sha_col])) {
        throw malformed_row(row_no, "sha256 must be 64 hex characters, got '" + r[sha_col] + "'");
    }
    rec.sha256 = lower(r[sha_col]);
    rec.family = r[family_col];
    if (rec.family.empty()) throw malformed_row(row_no, "empty family");
    const auto first = parse_date(r[first_col]);
    const auto last = parse_date(r[last_col]);
    if (!first) throw malformed_row(row_no, "bad first_seen '" + r[first_col] + "'");
    if (!last) throw malformed_row(row_no, "bad last_seen '" + r[last_col] + "'");
    if (*last < *first) throw malformed_row(row_no, "last_seen precedes first_seen");
    rec.first_seen = *first;
    rec.last_seen = *last;
    return rec;
}

std::vector<csv::row> parse_table(std::string_view text) {
    auto rows = csv::parse(text);
    if (rows.empty()) throw error(errc::missing_column, "CSV has no header row");
    return rows;
}

void check_width(const csv::row& r, std::size_t width, std::size_t row_no) {
    if (r.size() != width) {
        throw malformed_row(row_no, "expected " + std::to_string(width) + " fields, found " +
                                        std::to_string(r.size()));
    }
}

} // namespace

std::vector<sample_record> ingest_metadata(std::string_view csv_text) {
    const auto rows = parse_table(csv_text);
    const header_index h(rows.front());
    const std::size_t sha = h.require("sha256");
    const std::size_t family = h.require("family");
    const std::size_t first = h.require("first_seen");
    const std::size_t last = h.require("last_seen");
    const auto path = h.find("path");

    std::vector<sample_record> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        check_width(rows[i], rows.front().size(), i);
        sample_record rec = parse_sample(rows[i], i, sha, family, first, last);
        if (path && !rows[i][*path].empty()) rec.path = rows[i][*path];
        out.push_back(std::move(rec));
    }
    return out;
}

std::string metadata_to_csv(std::span<const sample_record> records) {
    std::string out = csv::format_row({"sha256", "family", "first_seen", "last_seen"});
    for (const auto& r : records) {
        out += csv::format_row({r.sha256, r.family, to_string(r.first_seen), to_string(r.last_seen)});
    }
    return out;
}

digest_row digest_bytes(byte_view data) {
    digest_row row;
    row.sha256 = sha256_hex(data);
    row.size = data.size();
    if (!data.empty()) row.ssdeep = ssdeep_hash(data);
    try {
        row.tlsh = tlsh_hash(data);
    } catch (const error&) {
    }
    try {
        row.imp = compute_imphash(parse_imports(data));
    } catch (const error&) {
    }
    return row;
}

hash_report hash_directory(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw error(errc::io_error, "not a directory: " + dir.string());
    }
    std::vector<fs::path> candidates;
    hash_report report;
    fs::recursive_directory_iterator it(dir, fs::directory_options::follow_directory_symlink, ec);
    if (ec) throw error(errc::io_error, "cannot list " + dir.string() + ": " + ec.message());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) {
            report.errors.push_back({it->path(), ec.message()});
            break;
        }
        const auto status = it->status(ec);
        if (ec) {
            ec.clear();
            candidates.push_back(it->path());
            continue;
        }
        if (fs::is_directory(status)) continue;
        if (fs::is_regular_file(status) || !fs::exists(status)) candidates.push_back(it->path());
    }
    std::sort(candidates.begin(), candidates.end());

    for (const auto& path : candidates) {
        try {
            digest_row row = digest_bytes(read_file(path));
            row.path = path;
            report.rows.push_back(std::move(row));
        } catch (const error& e) {
            report.errors.push_back({path, e.what()});
        }
    }
    std::sort(report.rows.begin(), report.rows.end(), [](const digest_row& a, const digest_row& b) {
        return std::tie(a.sha256, a.path) < std::tie(b.sha256, b.path);
    });
    return report;
}

std::string digest_rows_to_csv(std::span<const digest_row> rows) {
    std::string out = csv::format_row({"sha256", "size", "ssdeep", "tlsh", "imphash"});
    for (const auto& r : rows) {
        out += csv::format_row({r.sha256, std::to_string(r.size), r.ssdeep ? to_string(*r.ssdeep) : "",
                                r.tlsh ? to_string(*r.tlsh) : "", r.imp ? r.imp->hex() : ""});
    }
    return out;
}

join_result join_and_filter(std::span<const sample_record> metadata, std::span<const digest_row> digests) {
    std::map<std::string_view, const digest_row*> by_sha;
    for (const auto& d : digests) by_sha.try_emplace(d.sha256, &d);

    join_result out;
    std::set<std::string_view> seen;
    auto drop = [&](const char* reason) { ++out.drops[reason]; };
    for (const auto& meta : metadata) {
        const auto it = by_sha.find(meta.sha256);
        if (it == by_sha.end()) {
            drop("unmatched");
            continue;
        }
        if (!seen.insert(meta.sha256).second) {
            drop("duplicate");
            continue;
        }
        const digest_row& d = *it->second;
        if (d.size < min_sample_size) {
            drop("too-small");
        } else if (!d.ssdeep) {
            drop("no-ssdeep");
        } else if (!d.tlsh) {
            drop("no-tlsh");
        } else if (!d.imp) {
            drop("no-import-table");
        } else {
            out.records.push_back({meta, d.size, *d.ssdeep, *d.tlsh, *d.imp});
        }
    }
    std::sort(out.records.begin(), out.records.end(),
              [](const unified_record& a, const unified_record& b) { return a.meta.sha256 < b.meta.sha256; });
    return out;
}

std::string drops_to_json(const std::map<std::string, std::size_t>& drops) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [reason, count] : drops) j[reason] = count;
    return j.dump(2) + "\n";
}

std::string unified_to_csv(std::span<const unified_record> records) {
    std::string out = csv::format_row(
        {"sha256", "family", "first_seen", "last_seen", "size", "ssdeep", "tlsh", "imphash"});
    for (const auto& r : records) {
        out += csv::format_row({r.meta.sha256, r.meta.family, to_string(r.meta.first_seen),
                                to_string(r.meta.last_seen), std::to_string(r.size), to_string(r.ssdeep),
                                to_string(r.tlsh), r.imp.hex()});
    }
    return out;
}

std::vector<unified_record> read_unified_csv(std::string_view csv_text) {
    const auto rows = parse_table(csv_text);
    const header_index h(rows.front());
    const std::size_t sha = h.require("sha256");
    const std::size_t family = h.require("family");
    const std::size_t first = h.require("first_seen");
    const std::size_t last = h.require("last_seen");
    const std::size_t size = h.require("size");
    const std::size_t ss = h.require("ssdeep");
    const std::size_t tl = h.require("tlsh");
    const std::size_t ih = h.require("imphash");

    std::vector<unified_record> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        check_width(r, rows.front().size(), i);
        unified_record u;
        u.meta = parse_sample(r, i, sha, family, first, last);
        const auto& sz = r[size];
        const auto res = std::from_chars(sz.data(), sz.data() + sz.size(), u.size);
        if (res.ec != std::errc{} || res.ptr != sz.data() + sz.size()) {
            throw malformed_row(i, "bad size '" + sz + "'");
        }
        if (u.size < min_sample_size) throw malformed_row(i, "size below " + std::to_string(min_sample_size));
        try {
            u.ssdeep = parse_ssdeep(r[ss]);
            u.tlsh = parse_tlsh(r[tl]);
            u.imp = parse_imphash(r[ih]);
        } catch (const malformed_digest& e) {
            throw malformed_row(i, e.what());
        }
        out.push_back(std::move(u));
    }
    return out;
}

family_table family_distribution(std::span<const sample_record> records) {
    if (records.empty()) throw error(errc::empty_table, "family distribution of no records");
    std::map<std::string, std::map<std::string, std::size_t>> cells;
    std::set<std::string> months;
    for (const auto& r : records) {
        const std::string month = to_string(r.first_seen).substr(0, 7);
        ++cells[r.family][month];
        months.insert(month);
    }
    family_table t;
    t.months.assign(months.begin(), months.end());
    for (const auto& [family, row] : cells) {
        t.families.push_back(family);
        std::vector<std::size_t> counts;
        for (const auto& m : t.months) {
            const auto it = row.find(m);
            counts.push_back(it == row.end() ? 0 : it->second);
        }
        t.counts.push_back(std::move(counts));
    }
    return t;
}

std::string to_csv(const family_table& table) {
    csv::row header{"family"};
    header.insert(header.end(), table.months.begin(), table.months.end());
    std::string out = csv::format_row(header);
    for (std::size_t f = 0; f < table.families.size(); ++f) {
        csv::row r{table.families[f]};
        for (std::size_t c : table.counts[f]) r.push_back(std::to_string(c));
        out += csv::format_row(r);
    }
    return out;
}

namespace {

struct dll_pool_entry {
    const char* dll;
    std::vector<const char*> symbols;
};

const std::vector<dll_pool_entry>& dll_pool() {
    static const std::vector<dll_pool_entry> pool = {
        {"KERNEL32.dll",
         {"CreateFileW", "ReadFile", "WriteFile", "CloseHandle", "GetProcAddress", "LoadLibraryA",
          "VirtualAlloc", "VirtualFree", "Sleep", "GetTickCount", "CreateThread", "GetModuleHandleW",
          "WaitForSingleObject", "ExitProcess"}},
        {"USER32.dll",
         {"MessageBoxW", "GetMessageW", "DispatchMessageW", "FindWindowA", "GetForegroundWindow",
          "SetWindowsHookExA", "GetAsyncKeyState", "ShowWindow"}},
        {"ADVAPI32.dll",
         {"RegOpenKeyExW", "RegSetValueExW", "RegCloseKey", "OpenProcessToken", "AdjustTokenPrivileges",
          "CryptAcquireContextW", "GetUserNameW"}},
        {"WS2_32.dll", {"WSAStartup", "connect", "send", "recv", "socket", "closesocket", "gethostbyname"}},
        {"WININET.dll",
         {"InternetOpenA", "InternetConnectA", "HttpOpenRequestA", "HttpSendRequestA", "InternetReadFile",
          "InternetCloseHandle"}},
        {"SHELL32.dll", {"ShellExecuteW", "SHGetFolderPathW", "CommandLineToArgvW"}},
        {"ntdll.dll", {"NtQueryInformationProcess", "RtlGetVersion", "NtClose", "RtlMoveMemory"}},
        {"CRYPT32.dll", {"CryptStringToBinaryA", "CertOpenStore", "CryptUnprotectData"}},
        {"msvcrt.dll", {"malloc", "free", "memcpy", "strlen", "sprintf", "rand", "srand"}},
    };
    return pool;
}

std::size_t below(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

template <typename T>
void shuffle_prefix(std::vector<T>& v, std::size_t count, std::mt19937_64& rng) {
    for (std::size_t i = 0; i < count && i < v.size(); ++i) {
        std::swap(v[i], v[i + below(rng, v.size() - i)]);
    }
}

std::vector<pe_import_spec> random_profile(std::mt19937_64& rng) {
    std::vector<std::size_t> dlls(dll_pool().size());
    for (std::size_t i = 0; i < dlls.size(); ++i) dlls[i] = i;
    const std::size_t n_dlls = 2 + below(rng, 3);
    shuffle_prefix(dlls, n_dlls, rng);

    std::vector<pe_import_spec> profile;
    for (std::size_t d = 0; d < n_dlls; ++d) {
        const auto& entry = dll_pool()[dlls[d]];
        std::vector<const char*> syms = entry.symbols;
        const std::size_t n_syms = 2 + below(rng, std::min<std::size_t>(5, syms.size() - 1));
        shuffle_prefix(syms, n_syms, rng);
        pe_import_spec spec{entry.dll, {}};
        for (std::size_t s = 0; s < n_syms; ++s) spec.symbols.emplace_back(std::string(syms[s]));
        profile.push_back(std::move(spec));
    }
    return profile;
}

imphash profile_hash(const std::vector<pe_import_spec>& profile) {
    import_table t;
    for (const auto& imp : profile) {
        for (const auto& s : imp.symbols) {
            const std::string sym = std::holds_alternative<std::string>(s)
                                        ? std::get<std::string>(s)
                                        : "ord" + std::to_string(std::get<std::uint16_t>(s));
            t.entries.push_back(normalize_import(imp.dll, sym));
        }
    }
    return compute_imphash(t);
}

byte_buffer random_buffer(std::mt19937_64& rng, std::size_t n) {
    byte_buffer out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng() >> 56);
    return out;
}

} // namespace

void validate(const synth_config& cfg) {
    if (cfg.families < 2) throw error(errc::invalid_argument, "families must be at least 2");
    if (cfg.samples_per_family < 2) throw error(errc::invalid_argument, "samples_per_family must be at least 2");
    if (!(cfg.mutation_rate >= 0.0 && cfg.mutation_rate <= 1.0)) {
        throw error(errc::invalid_argument, "mutation_rate must lie in [0, 1]");
    }
    if (!(cfg.extra_section_rate >= 0.0 && cfg.extra_section_rate <= 1.0)) {
        throw error(errc::invalid_argument, "extra_section_rate must lie in [0, 1]");
    }
    if (!cfg.import_profiles.empty() && cfg.import_profiles.size() != cfg.families) {
        throw error(errc::invalid_argument, "one import profile per family required");
    }
    for (const auto& p : cfg.import_profiles) {
        if (p.empty()) throw error(errc::invalid_argument, "import profiles must be nonempty");
    }
}

std::string synth_family_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "family_%02zu", index + 1);
    return buf;
}

std::vector<sample_record> synth_corpus(const synth_config& cfg, const fs::path& out) {
    validate(cfg);
    std::mt19937_64 rng(cfg.seed);

    std::vector<std::vector<pe_import_spec>> profiles = cfg.import_profiles;
    if (profiles.empty()) {
        std::set<imphash> used;
        while (profiles.size() < cfg.families) {
            auto p = random_profile(rng);
            if (used.insert(profile_hash(p)).second) profiles.push_back(std::move(p));
        }
    }

    const fs::path samples = out / "samples";
    std::error_code ec;
    fs::create_directories(samples, ec);
    if (ec) throw error(errc::io_error, "cannot create " + samples.string() + ": " + ec.message());

    std::vector<sample_record> manifest;
    for (std::size_t f = 0; f < cfg.families; ++f) {
        const bool wide = below(rng, 2) == 1;
        const byte_buffer base = random_buffer(rng, 4096 + below(rng, 8193));
        const auto flips = static_cast<std::size_t>(std::llround(cfg.mutation_rate * static_cast<double>(base.size())));

        for (std::size_t s = 0; s < cfg.samples_per_family; ++s) {
            pe_image_spec spec{wide, profiles[f], base, {}, static_cast<std::uint32_t>(rng())};
            std::vector<std::size_t> positions(base.size());
            for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
            shuffle_prefix(positions, flips, rng);
            for (std::size_t i = 0; i < flips; ++i) {
                spec.payload[positions[i]] ^= static_cast<std::uint8_t>(1 + below(rng, 255));
            }
            if (static_cast<double>(rng() >> 11) * 0x1p-53 < cfg.extra_section_rate) {
                spec.extra_sections.push_back(random_buffer(rng, 256 + below(rng, 769)));
            }

            const byte_buffer image = build_pe(spec);
            sample_record rec{sha256_hex(image), synth_family_name(f), cfg.date, cfg.date, std::nullopt};
            rec.path = samples / rec.sha256;
            write_file_atomic(*rec.path, std::string_view(reinterpret_cast<const char*>(image.data()), image.size()));
            manifest.push_back(std::move(rec));
        }
    }
    write_file_atomic(out / "manifest.csv", metadata_to_csv(manifest));
    return manifest;
}

} // namespace hashclust
