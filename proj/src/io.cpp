#include "magflow/io.hpp"

#include "magflow/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace magflow {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_number(const std::string& s, double& v) {
    if (s == "nan") {
        v = std::nan("");
        return true;
    }
    if (s == "inf" || s == "-inf") {
        v = s[0] == '-' ? -INFINITY : INFINITY;
        return true;
    }
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    const auto res = std::from_chars(first, s.data() + s.size(), v);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size() && !s.empty();
}

} // namespace

CsvTable parse_csv(std::istream& in) {
    CsvTable table;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_fields(line);
        std::vector<double> row(fields.size());
        bool numeric = true;
        for (std::size_t i = 0; i < fields.size(); ++i) numeric = numeric && parse_number(fields[i], row[i]);
        if (!numeric) {
            if (rows.empty() && table.header.empty()) {
                table.header = fields;
                continue;
            }
            throw Error("csv: non-numeric field on line " + std::to_string(lineno));
        }
        const std::size_t width = table.header.empty() ? (rows.empty() ? row.size() : rows.front().size())
                                                       : table.header.size();
        if (row.size() != width) throw Error("csv: ragged row on line " + std::to_string(lineno));
        rows.push_back(std::move(row));
    }
    const auto cols = rows.empty() ? static_cast<Eigen::Index>(table.header.size())
                                   : static_cast<Eigen::Index>(rows.front().size());
    table.values.resize(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return parse_csv(in);
}

void write_csv(std::ostream& out, const Matrix& values, const std::vector<std::string>& header) {
    if (!header.empty()) {
        if (static_cast<Eigen::Index>(header.size()) != values.cols() && values.rows() > 0) {
            throw std::invalid_argument("write_csv: header width mismatch");
        }
        for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
        out << '\n';
    }
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values(r, c));
        out << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const Matrix& values, const std::vector<std::string>& header) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    write_csv(out, values, header);
    if (!out) throw Error("write failed: " + path.string());
}

PointSet read_points(const std::filesystem::path& path) { return PointSet(read_csv(path).values); }

std::vector<std::string> numbered(const std::string& prefix, std::size_t count) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

} // namespace magflow
