#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace stocknet::csv {

// Splits one CSV line on commas. No quoting; the formats used here never
// contain embedded commas. A trailing comma yields a trailing empty field.
std::vector<std::string> split_line(const std::string& line);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

// Parses a cell into a double; throws DataError naming `context` otherwise.
double parse_double(const std::string& cell, const std::string& context);

// Parses a whole file into header + rows, dropping a UTF-8 BOM and blank
// trailing lines. Every row must have the header's field count.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
Table read_table(std::istream& in);

// Wide panel format: header `date,<asset...>`, one row per label.
void write_wide_panel(std::ostream& out, const std::vector<std::string>& assets,
                      const std::vector<std::string>& row_labels,
                      const Eigen::MatrixXd& values);

}  // namespace stocknet::csv
