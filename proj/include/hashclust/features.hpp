#pragma once

// Digest vectorization, z-score scaling, and the two distance metrics used
// for clustering (Euclidean) and import-set comparison (Jaccard).

#include <hashclust/pe_import.hpp>
#include <hashclust/ssdeep.hpp>
#include <hashclust/tlsh.hpp>

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hashclust {

enum class scheme { ssdeep, tlsh, imphash };

inline constexpr std::size_t ssdeep_feature_width = 129;
inline constexpr std::size_t tlsh_feature_width = 131;

/// "ssdeep", "tlsh" or "imphash".
std::string_view to_string(scheme s) noexcept;
/// Throws `error{errc::invalid_argument}` for an unknown name.
scheme parse_scheme(std::string_view name);

struct feature_vector {
    scheme kind = scheme::ssdeep;
    std::vector<double> values;
};

/// Row-major matrix; one row per sample.
class feature_matrix {
public:
    feature_matrix() = default;
    feature_matrix(scheme kind, std::vector<std::string> columns, std::vector<std::string> sample_ids);

    scheme kind() const noexcept { return kind_; }
    std::size_t rows() const noexcept { return sample_ids_.size(); }
    std::size_t cols() const noexcept { return columns_.size(); }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

    const std::vector<std::string>& columns() const noexcept { return columns_; }
    const std::vector<std::string>& sample_ids() const noexcept { return sample_ids_; }
    const std::vector<double>& data() const noexcept { return data_; }

    /// Returns a matrix holding only the listed rows, in the listed order.
    feature_matrix select_rows(std::span<const std::size_t> rows) const;

private:
    scheme kind_ = scheme::ssdeep;
    std::vector<std::string> columns_;
    std::vector<std::string> sample_ids_;
    std::vector<double> data_;
};

struct scaling_params {
    std::vector<double> mean;
    std::vector<double> std; // population standard deviation
};

/// [log2(block_size / 3)] ++ coarse histogram (64) ++ fine histogram (64);
/// each histogram is normalized by its signature length (empty: all zero).
feature_vector vectorize_ssdeep(const ssdeep_digest& d);

/// [l_value, q1_ratio, q2_ratio] ++ 128 body codes.
feature_vector vectorize_tlsh(const tlsh_digest& d);

/// One-hot over distinct hashes in first-seen order. `sample_ids` may be
/// empty, in which case rows are labelled by index.
feature_matrix vectorize_imphash(std::span<const imphash> corpus,
                                 std::vector<std::string> sample_ids = {});

/// Stacks equal-length vectors of one scheme into a matrix.
/// Throws `error{errc::dimension_mismatch}` or `error{errc::empty_matrix}`.
feature_matrix stack_vectors(std::span<const feature_vector> rows, std::vector<std::string> sample_ids);

std::vector<std::string> feature_columns(scheme s);

/// Per column: (x - mean) / std, with zero-variance columns set to 0.
/// Throws `error{errc::too_few_samples}` below two rows.
std::pair<feature_matrix, scaling_params> standardize(const feature_matrix& m);

/// Throws `error{errc::dimension_mismatch}`.
double euclidean(std::span<const double> p, std::span<const double> q);
double euclidean(const feature_vector& p, const feature_vector& q);

/// |X ∩ Y| / |X ∪ Y|. Throws `error{errc::both_empty}`.
double jaccard(const std::set<std::string>& x, const std::set<std::string>& y);

/// Dense symmetric n x n matrix.
struct square_matrix {
    std::size_t n = 0;
    std::vector<double> values;

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

// All four throw `error{errc::too_few_samples}` for fewer than two samples.
square_matrix pairwise_euclidean(const feature_matrix& m);
square_matrix pairwise_jaccard(std::span<const std::set<std::string>> sets);
square_matrix pairwise_tlsh(std::span<const tlsh_digest> digests);
square_matrix pairwise_ssdeep(std::span<const ssdeep_digest> digests);

/// Header "sha256,<column labels>", one row per sample.
std::string to_csv(const feature_matrix& m);
/// Throws `error{errc::missing_column}` / `malformed_row`.
feature_matrix feature_matrix_from_csv(std::string_view text, scheme kind);

} // namespace hashclust
