#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prosobench::text {

std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);

/// Splits text into lines, accepting LF or CRLF endings. A trailing newline
/// does not produce an empty final line.
std::vector<std::string_view> lines(std::string_view s);

/// Strict full-field parse; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// Fixed-precision rendering ("%.{digits}f").
std::string format_fixed(double v, int digits);

/// FNV-1a 64-bit, rendered as 16 hex digits.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace prosobench::text
