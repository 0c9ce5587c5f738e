#include <hashclust/error.hpp>

namespace hashclust {

const char* to_string(errc code) noexcept {
    switch (code) {
    case errc::empty_input: return "EmptyInput";
    case errc::too_short: return "TooShort";
    case errc::degenerate_input: return "DegenerateInput";
    case errc::malformed_digest: return "MalformedDigest";
    case errc::not_pe: return "NotPe";
    case errc::no_import_table: return "NoImportTable";
    case errc::truncated_file: return "TruncatedFile";
    case errc::empty_table: return "EmptyTable";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::both_empty: return "BothEmpty";
    case errc::too_few_samples: return "TooFewSamples";
    case errc::k_too_large: return "KTooLarge";
    case errc::empty_matrix: return "EmptyMatrix";
    case errc::single_cluster: return "SingleCluster";
    case errc::missing_column: return "MissingColumn";
    case errc::malformed_row: return "MalformedRow";
    case errc::invalid_argument: return "InvalidArgument";
    case errc::io_error: return "IoError";
    }
    return "Unknown";
}

error::error(errc code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

malformed_digest::malformed_digest(std::size_t position, const std::string& message)
    : error(errc::malformed_digest, message + " (at position " + std::to_string(position) + ")"),
      position_(position) {}

malformed_row::malformed_row(std::size_t row, const std::string& reason)
    : error(errc::malformed_row, "row " + std::to_string(row) + ": " + reason),
      row_(row),
      reason_(reason) {}

} // namespace hashclust
