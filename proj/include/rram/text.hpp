#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rram::text {

/// Shortest representation that parses back to the identical double.
std::string format_double(double v);

std::vector<std::string_view> split(std::string_view line, char sep);
std::vector<std::string_view> lines(std::string_view text);
std::string_view trim(std::string_view s);

// Strict parsers: the whole field must be consumed. `what` names the field in
// the ParseError message.
double parse_double(std::string_view s, std::string_view what);
std::int64_t parse_int(std::string_view s, std::string_view what);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace rram::text
