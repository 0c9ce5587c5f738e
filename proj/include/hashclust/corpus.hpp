#pragma once

// Sample metadata, directory hashing, the metadata/digest join and the
// synthetic PE corpus generator.

#include <hashclust/pe_builder.hpp>
#include <hashclust/pe_import.hpp>
#include <hashclust/ssdeep.hpp>
#include <hashclust/tlsh.hpp>

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hashclust {

struct civil_date {
    int year = 1970;
    unsigned month = 1;
    unsigned day = 1;

    auto operator<=>(const civil_date&) const = default;
};

/// Strict "YYYY-MM-DD" with calendar validation; nullopt otherwise.
std::optional<civil_date> parse_date(std::string_view text);
std::string to_string(const civil_date& d);

bool is_sha256_hex(std::string_view text) noexcept;

struct sample_record {
    std::string sha256; // 64 lowercase hex
    std::string family;
    civil_date first_seen;
    civil_date last_seen;
    std::optional<std::filesystem::path> path;

    bool operator==(const sample_record&) const = default;
};

/// Columns sha256, family, first_seen, last_seen in any order, plus an
/// optional "path"; other columns are ignored. Hex digits are lowercased.
/// Throws `error{errc::missing_column}` or `malformed_row` (first bad row).
std::vector<sample_record> ingest_metadata(std::string_view csv_text);

std::string metadata_to_csv(std::span<const sample_record> records);

struct digest_row {
    std::string sha256;
    std::uint64_t size = 0;
    std::optional<ssdeep_digest> ssdeep; // absent only for empty files
    std::optional<tlsh_digest> tlsh;
    std::optional<imphash> imp;
    std::filesystem::path path;

    bool operator==(const digest_row&) const = default;
};

/// All three digests of one buffer; failures leave the field empty.
digest_row digest_bytes(byte_view data);

struct file_error {
    std::filesystem::path path;
    std::string message;
};

struct hash_report {
    std::vector<digest_row> rows; // sorted by sha256, then path
    std::vector<file_error> errors;
};

/// Digests every file below `dir` (recursively, following symlinks). Files
/// that cannot be read are reported in `errors`; FIFOs, sockets and devices
/// are skipped. Throws `error{errc::io_error}` if `dir` is not a directory.
hash_report hash_directory(const std::filesystem::path& dir);

/// Header sha256,size,ssdeep,tlsh,imphash; absent digests are empty fields.
std::string digest_rows_to_csv(std::span<const digest_row> rows);

struct unified_record {
    sample_record meta;
    std::uint64_t size = 0;
    ssdeep_digest ssdeep;
    tlsh_digest tlsh;
    imphash imp;

    bool operator==(const unified_record&) const = default;
};

inline constexpr std::uint64_t min_sample_size = 50;

struct join_result {
    std::vector<unified_record> records; // sorted by sha256
    std::map<std::string, std::size_t> drops; // reason -> count, nonzero only
};

/// Inner join on sha256. Each metadata row is kept or counted under exactly
/// one reason, checked in this order: "unmatched", "duplicate",
/// "too-small", "no-ssdeep", "no-tlsh", "no-import-table".
join_result join_and_filter(std::span<const sample_record> metadata, std::span<const digest_row> digests);

std::string drops_to_json(const std::map<std::string, std::size_t>& drops);

/// sha256,family,first_seen,last_seen,size,ssdeep,tlsh,imphash
std::string unified_to_csv(std::span<const unified_record> records);
/// Throws `error{errc::missing_column}` or `malformed_row`.
std::vector<unified_record> read_unified_csv(std::string_view csv_text);

struct family_table {
    std::vector<std::string> families; // lexicographic
    std::vector<std::string> months;   // "YYYY-MM", lexicographic
    std::vector<std::vector<std::size_t>> counts; // [family][month]
};

/// Counts records by family and first_seen month.
/// Throws `error{errc::empty_table}` for no records.
family_table family_distribution(std::span<const sample_record> records);
std::string to_csv(const family_table& table);

struct synth_config {
    std::size_t families = 6;
    std::size_t samples_per_family = 20;
    double mutation_rate = 0.02;
    double extra_section_rate = 0.25; // chance a variant gains a section
    std::uint64_t seed = 1;
    civil_date date{2024, 1, 1};
    std::vector<std::vector<pe_import_spec>> import_profiles; // per family; generated when empty
};

/// Throws `error{errc::invalid_argument}` if `cfg` violates its invariants.
void validate(const synth_config& cfg);

/// Deterministic family names: "family_01", "family_02", ...
std::string synth_family_name(std::size_t index);

/// Writes samples to `<out>/samples/<sha256>` and `<out>/manifest.csv`.
/// Returns the manifest records in generation order.
std::vector<sample_record> synth_corpus(const synth_config& cfg, const std::filesystem::path& out);

} // namespace hashclust
