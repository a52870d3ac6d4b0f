#include "rh/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rh/common.hpp"

namespace rh {

std::string CsvTable::meta(const std::string& key) const {
    for (const auto& [k, v] : metadata)
        if (k == key) return v;
    return {};
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw validation_error("csv: missing column '" + name + "'");
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    if (s.empty()) throw validation_error("csv: empty numeric cell");
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    while (end && *end == ' ') ++end;
    if (end == begin || (end && *end != '\0'))
        throw validation_error("csv: cannot parse number '" + s + "'");
    return v;
}

namespace {
std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}
}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("csv: cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            // Metadata line: "# key,value" (value may contain commas).
            std::string body = line.substr(1);
            if (!body.empty() && body[0] == ' ') body.erase(0, 1);
            const auto comma = body.find(',');
            if (comma == std::string::npos)
                t.metadata.emplace_back(body, "");
            else
                t.metadata.emplace_back(body.substr(0, comma), body.substr(comma + 1));
            continue;
        }
        if (!have_header) {
            t.columns = split_commas(line);
            if (t.columns.empty()) throw validation_error("csv: empty header in '" + path + "'");
            have_header = true;
            continue;
        }
        const auto cells = split_commas(line);
        if (cells.size() != t.columns.size())
            throw validation_error("csv: row width mismatch in '" + path + "'");
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) row[i] = parse_double(cells[i]);
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw validation_error("csv: no header row in '" + path + "'");
    return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("csv: cannot write '" + path + "'");
    for (const auto& [k, v] : table.metadata) out << "# " << k << "," << v << "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out << ",";
        out << table.columns[i];
    }
    out << "\n";
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw validation_error("csv: row width mismatch while writing '" + path + "'");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            out << format_double(row[i]);
        }
        out << "\n";
    }
    if (!out) throw validation_error("csv: write failed for '" + path + "'");
}

}  // namespace rh
