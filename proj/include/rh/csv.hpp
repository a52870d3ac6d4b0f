#pragma once

#include <string>
#include <utility>
#include <vector>

namespace rh {

// Minimal numeric CSV with a '#'-prefixed metadata preamble:
//
//   # version,0.1.0
//   # seed,42
//   t,x,value
//   0,100,7.9655674554058038
//
// All cells are doubles serialized with 17 significant digits, so a
// load/save cycle reproduces the file byte for byte. Infinities are written
// in-band as "inf"/"-inf".
struct CsvTable {
    std::vector<std::pair<std::string, std::string>> metadata;  // preamble, in order
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    // Metadata lookup; returns empty string when absent.
    std::string meta(const std::string& key) const;
    // Column index by name; raises validation_error when absent.
    std::size_t column(const std::string& name) const;
};

// %.17g serialization; infinities as "inf"/"-inf".
std::string format_double(double v);
// strtod-based parse accepting "inf"/"-inf"; raises validation_error on junk.
double parse_double(const std::string& s);

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

}  // namespace rh
