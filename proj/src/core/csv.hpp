#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace compindex::csv {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

/// Strict double parse of a whole field; throws DataError on junk.
double parse_double(const std::string& field, const std::string& context);

/// Quotes a field if it contains separators, quotes or newlines.
std::string escape(const std::string& field);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 when absent
};

/// RFC-4180-style reader (quoted fields, embedded commas/newlines, CRLF).
Table read_file(const std::filesystem::path& path);
Table parse(const std::string& text, const std::string& context);

void write_file(const std::filesystem::path& path, const Table& table);
std::string to_string(const Table& table);

} // namespace compindex::csv
