#pragma once

// Minimal RFC 4180 reader/writer: comma separated, '"' quoting, CRLF or LF.

#include <string>
#include <string_view>
#include <vector>

namespace hashclust::csv {

using row = std::vector<std::string>;

/// Splits `text` into rows of fields. Blank lines are skipped. Throws
/// `error{errc::malformed_row}` for an unterminated quoted field.
std::vector<row> parse(std::string_view text);

/// Quotes a field only when it contains a comma, quote or line break.
std::string escape(std::string_view field);

std::string format_row(const row& fields);

/// Shortest decimal form that parses back to the same double.
std::string format_number(double value);

} // namespace hashclust::csv
