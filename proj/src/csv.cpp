#include "stocknet/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "stocknet/errors.hpp"

namespace stocknet::csv {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& cell, const std::string& context) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw DataError("non-numeric cell '" + cell + "' in " + context);
    }
    return value;
}

namespace {

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

Table read_table(std::istream& in) {
    Table table;
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty input");
    line = strip_cr(line);
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    table.header = split_line(line);

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != table.header.size()) {
            throw DataError("row " + std::to_string(lineno) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    return table;
}

void write_wide_panel(std::ostream& out, const std::vector<std::string>& assets,
                      const std::vector<std::string>& row_labels,
                      const Eigen::MatrixXd& values) {
    out << "date";
    for (const auto& asset : assets) out << ',' << asset;
    out << '\n';
    for (Eigen::Index t = 0; t < values.rows(); ++t) {
        out << row_labels[static_cast<std::size_t>(t)];
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            out << ',' << format_double(values(t, j));
        }
        out << '\n';
    }
}

}  // namespace stocknet::csv
