#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace plumecal::io {

/// C99 hexadecimal float text ("0x1.8p+1"); parses back bit-exactly.
std::string to_hex(double value);
double from_hex(const std::string& text);

/// Shortest decimal that round-trips (17 significant digits).
std::string to_decimal(double value);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;  // throws ConfigError
};

/// Minimal RFC-4180-free CSV: comma separated, no quoting, '#' comment lines.
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

double parse_double(const std::string& text, const std::string& context);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace plumecal::io
