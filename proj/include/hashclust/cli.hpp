#pragma once

// Pipeline commands behind the `hashclust` executable. Each command writes
// its outputs atomically plus a run manifest, and throws `usage_error` or
// `hashclust::error` on failure.

#include <hashclust/clustering.hpp>
#include <hashclust/corpus.hpp>
#include <hashclust/features.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hashclust::cli {

namespace fs = std::filesystem;

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_data = 2;

inline constexpr const char* seed_env = "HASHCLUST_SEED";
inline constexpr std::uint64_t default_seed = 1;

class usage_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Seed from HASHCLUST_SEED, or `default_seed` when unset.
/// Throws `usage_error` if the variable is not an unsigned integer.
std::uint64_t seed_from_env();

struct hash_options {
    fs::path dir;
    fs::path out;
    std::optional<fs::path> metadata; // switches the output to the unified table
    std::optional<fs::path> drops;    // default: <out>.drops.json
};

struct hash_summary {
    std::size_t files = 0;
    std::size_t rows = 0;
    std::vector<file_error> errors;
    std::map<std::string, std::size_t> drops;
};

hash_summary cmd_hash(const hash_options& opt, std::ostream& log);

struct cluster_options {
    fs::path unified;
    scheme kind = scheme::tlsh;
    std::size_t k = 6;
    std::uint64_t seed = default_seed;
    fs::path out; // prefix: <out>.labels.csv, <out>.projection.csv, <out>.json
    bool json = false;
};

clustering_result cmd_cluster(const cluster_options& opt, std::ostream& log);

struct sweep_options {
    fs::path unified;
    scheme kind = scheme::tlsh;
    std::size_t k_min = 2;
    std::size_t k_max = 10;
    std::uint64_t seed = default_seed;
    fs::path out; // prefix: <out>.silhouette.csv, <out>.json
    bool json = false;
};

silhouette_report cmd_sweep(const sweep_options& opt, std::ostream& log);

struct report_options {
    fs::path unified;
    fs::path out_dir;
    std::optional<fs::path> samples; // directory of <sha256> files, for import-set Jaccard
    std::size_t k = 6;
    std::uint64_t seed = default_seed;
};

void cmd_report(const report_options& opt, std::ostream& log);

struct synth_options {
    synth_config cfg;
    fs::path out;
};

std::vector<sample_record> cmd_synth(const synth_options& opt, std::ostream& log);

/// Standardized feature matrix of one scheme over unified records; rows
/// keyed by sha256 in record order.
feature_matrix scheme_features(std::span<const unified_record> records, scheme kind);

/// Reads and parses a unified CSV file.
std::vector<unified_record> load_unified(const fs::path& path);

/// Maps an in-flight exception to an exit code and prints it to `err`,
/// as plain text or as a one-line JSON object.
int report_exception(std::exception_ptr ex, std::ostream& err, bool json);

std::string tool_version();

} // namespace hashclust::cli
