#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace climadapt {

// Shortest decimal representation that round-trips to the same double.
std::string format_number(double v);

double parse_double(std::string_view text, std::string_view context);
long long parse_int(std::string_view text, std::string_view context);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
// Whitespace-separated tokens.
std::vector<std::string> tokens(std::string_view s);

// Comma-delimited table with a header row. Blank lines and lines starting
// with '#' are ignored.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a required column; throws DataError naming the file.
  std::size_t column(std::string_view name) const;
  std::string where(std::size_t row) const;  // "file:row N"
};

CsvTable parse_csv(std::string_view text, std::string source);
CsvTable read_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace climadapt
