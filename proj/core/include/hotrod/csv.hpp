#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hotrod/types.hpp"

namespace hotrod {

// Minimal CSV support for the pipeline's fixed schemas: comma-separated,
// first non-comment line is the header, '#' lines are metadata comments.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> comments;  // leading '#' lines, without the '#'

    int column(const std::string& name) const;          // -1 when absent
    int require_column(const std::string& name) const;  // throws input error
};

CsvTable read_csv(const std::filesystem::path& path);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

double parse_double(const std::string& s, const std::string& context);
std::int64_t parse_int(const std::string& s, const std::string& context);

// Round-trip-exact float formatting shared by every artifact writer
// (17 significant digits).
std::string format_double(double v);

}  // namespace hotrod
