#pragma once

// Small text helpers shared by the file formats.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hl {

/// 17 significant digits; parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view field);
long long parse_integer(std::string_view field);

std::vector<std::string> split(std::string_view line, char delimiter);
std::string join(const std::vector<std::string>& fields, char delimiter);

std::string read_text_file(const std::filesystem::path& path);
/// Creates parent directories. Throws std::runtime_error if the file cannot be written.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace hl
