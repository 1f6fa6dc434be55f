#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sparseho::csv {

// Shortest text that reads back to the same double ("%.17g").
std::string format(double value);

std::vector<std::string> split_line(std::string_view line);

// Strict numeric parse; throws sparseho::Error naming `what` on failure.
double parse_double(std::string_view token, std::string_view what);

// Writes to a sibling temporary and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace sparseho::csv
