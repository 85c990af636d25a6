#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace iois {

// Shortest representation that parses back to the same double.
std::string format_double(double v);
// Fixed six decimals, used for metric columns.
std::string format_metric(double v);

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');
bool parse_double(std::string_view s, double& out);
bool parse_long(std::string_view s, long long& out);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace iois
