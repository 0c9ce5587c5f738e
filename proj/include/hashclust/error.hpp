#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hashclust {

enum class errc {
    empty_input,
    too_short,
    degenerate_input,
    malformed_digest,
    not_pe,
    no_import_table,
    truncated_file,
    empty_table,
    dimension_mismatch,
    both_empty,
    too_few_samples,
    k_too_large,
    empty_matrix,
    single_cluster,
    missing_column,
    malformed_row,
    invalid_argument,
    io_error,
};

const char* to_string(errc code) noexcept;

/// Base for every error the library throws. `code()` identifies the failure
/// class so callers can branch without string matching.
class error : public std::runtime_error {
public:
    error(errc code, const std::string& message);

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

/// Digest string could not be parsed. `position()` is the offset of the first
/// offending character (or the string length when a field is missing).
class malformed_digest : public error {
public:
    malformed_digest(std::size_t position, const std::string& message);

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// A CSV data row failed validation. Rows are numbered from 1, header excluded.
class malformed_row : public error {
public:
    malformed_row(std::size_t row, const std::string& reason);

    std::size_t row() const noexcept { return row_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t row_;
    std::string reason_;
};

} // namespace hashclust
