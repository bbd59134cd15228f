#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace affectflow::csv {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Strict parse: the whole (trimmed) token must be a finite or infinite real.
std::optional<double> parse_double(std::string_view token);

std::string_view trim(std::string_view s);

/// Splits on commas; no quoting support (the dataset contract has none).
std::vector<std::string_view> split(std::string_view line, char sep = ',');

/// Splits text into lines, accepting LF or CRLF and dropping a UTF-8 BOM.
std::vector<std::string_view> lines(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace affectflow::csv
