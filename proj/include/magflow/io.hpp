#pragma once

#include "magflow/geometry.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace magflow {

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header; // empty when the file had none
    Matrix values;
};

/// Numeric CSV. A first line containing any non-numeric field is taken as the header.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::istream& in);

void write_csv(const std::filesystem::path& path, const Matrix& values,
               const std::vector<std::string>& header = {});
void write_csv(std::ostream& out, const Matrix& values, const std::vector<std::string>& header = {});

/// Points as rows from a CSV file.
PointSet read_points(const std::filesystem::path& path);

/// prefix1, prefix2, ..., prefix<count>
std::vector<std::string> numbered(const std::string& prefix, std::size_t count);

} // namespace magflow
