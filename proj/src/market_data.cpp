#include "stocknet/market_data.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <unordered_set>

#include "stocknet/csv.hpp"
#include "stocknet/errors.hpp"

namespace stocknet {

namespace {

// Labels compare numerically when both parse as numbers, lexicographically
// otherwise, so both ISO dates and plain indices order naturally.
bool label_less(const std::string& a, const std::string& b) {
    double x = 0.0, y = 0.0;
    const auto ra = std::from_chars(a.data(), a.data() + a.size(), x);
    const auto rb = std::from_chars(b.data(), b.data() + b.size(), y);
    const bool a_num = ra.ec == std::errc{} && ra.ptr == a.data() + a.size();
    const bool b_num = rb.ec == std::errc{} && rb.ptr == b.data() + b.size();
    if (a_num && b_num) return x < y;
    return a < b;
}

void check_timestamps(const std::vector<std::string>& timestamps) {
    for (std::size_t t = 1; t < timestamps.size(); ++t) {
        if (!label_less(timestamps[t - 1], timestamps[t])) {
            throw DataError("timestamps not strictly increasing at '" + timestamps[t] + "'");
        }
    }
}

void check_assets(const std::vector<std::string>& assets) {
    std::unordered_set<std::string> seen;
    for (const auto& asset : assets) {
        if (asset.empty()) throw DataError("empty asset identifier in header");
        if (!seen.insert(asset).second) throw DataError("duplicate asset identifier '" + asset + "'");
    }
}

struct ParsedPanel {
    std::vector<std::string> assets;
    std::vector<std::string> timestamps;
    Eigen::MatrixXd values;
};

// Shared wide-CSV reader: validates the header, drops rows with empty cells.
ParsedPanel parse_wide_csv(std::istream& in, LoadReport* report) {
    const csv::Table table = csv::read_table(in);
    if (table.header.size() < 2 || table.header[0] != "date") {
        throw DataError("malformed header: expected 'date,<asset>,...'");
    }
    ParsedPanel panel;
    panel.assets.assign(table.header.begin() + 1, table.header.end());
    check_assets(panel.assets);

    const std::size_t n = panel.assets.size();
    std::vector<std::vector<double>> kept;
    for (const auto& row : table.rows) {
        bool missing = false;
        for (const auto& cell : row) {
            if (cell.empty()) {
                missing = true;
                break;
            }
        }
        if (missing) {
            if (report) ++report->rows_dropped;
            continue;
        }
        std::vector<double> values(n);
        for (std::size_t j = 0; j < n; ++j) {
            values[j] = csv::parse_double(row[j + 1], "column '" + panel.assets[j] +
                                                          "', date '" + row[0] + "'");
        }
        panel.timestamps.push_back(row[0]);
        kept.push_back(std::move(values));
    }
    if (kept.size() < 2) throw DataError("fewer than 2 usable rows after dropping missing data");

    panel.values.resize(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < kept.size(); ++t) {
        for (std::size_t j = 0; j < n; ++j) {
            panel.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = kept[t][j];
        }
    }
    return panel;
}

// Constant-column detection tolerant of floating-point dust: a column whose
// spread is negligible relative to its own magnitude has no usable variance.
// The relative test keeps genuinely tiny-but-varying columns (for example
// near-zero fit residuals) usable while catching log-diffs of exact
// exponentials that differ only in the last few ulps.
bool is_constant_column(const Eigen::VectorXd& col) {
    const double spread = col.maxCoeff() - col.minCoeff();
    return spread <= 1e-12 * col.cwiseAbs().maxCoeff();
}

}  // namespace

PricePanel PricePanel::create(std::vector<std::string> assets,
                              std::vector<std::string> timestamps, Eigen::MatrixXd prices) {
    if (static_cast<Eigen::Index>(assets.size()) != prices.cols() ||
        static_cast<Eigen::Index>(timestamps.size()) != prices.rows()) {
        throw DataError("price panel shape does not match its labels");
    }
    if (prices.rows() < 2) throw DataError("price panel needs at least 2 rows");
    check_assets(assets);
    check_timestamps(timestamps);
    for (Eigen::Index t = 0; t < prices.rows(); ++t) {
        for (Eigen::Index j = 0; j < prices.cols(); ++j) {
            const double p = prices(t, j);
            if (!std::isfinite(p) || p <= 0.0) {
                throw DataError("non-positive price " + csv::format_double(p) + " for asset '" +
                                assets[static_cast<std::size_t>(j)] + "' at '" +
                                timestamps[static_cast<std::size_t>(t)] + "'");
            }
        }
    }
    return PricePanel{std::move(assets), std::move(timestamps), std::move(prices)};
}

ReturnPanel ReturnPanel::create(std::vector<std::string> assets, Eigen::MatrixXd returns) {
    if (static_cast<Eigen::Index>(assets.size()) != returns.cols()) {
        throw DataError("return panel shape does not match its asset list");
    }
    if (returns.rows() < 1) throw DataError("return panel needs at least 1 row");
    check_assets(assets);
    for (Eigen::Index j = 0; j < returns.cols(); ++j) {
        if (!returns.col(j).allFinite()) {
            throw DataError("non-finite return in column '" + assets[static_cast<std::size_t>(j)] + "'");
        }
        // With a single observation there is no variance to speak of.
        if (returns.rows() >= 2 && is_constant_column(returns.col(j))) {
            throw DataError("constant returns for asset '" + assets[static_cast<std::size_t>(j)] + "'");
        }
    }
    return ReturnPanel{std::move(assets), std::move(returns)};
}

PricePanel load_prices(std::istream& in, LoadReport* report) {
    ParsedPanel parsed = parse_wide_csv(in, report);
    return PricePanel::create(std::move(parsed.assets), std::move(parsed.timestamps),
                              std::move(parsed.values));
}

ReturnPanel load_returns(std::istream& in, LoadReport* report) {
    ParsedPanel parsed = parse_wide_csv(in, report);
    return ReturnPanel::create(std::move(parsed.assets), std::move(parsed.values));
}

ReturnPanel to_log_returns(const PricePanel& panel) {
    const Eigen::Index t_out = panel.prices.rows() - 1;
    const Eigen::MatrixXd logs = panel.prices.array().log().matrix();
    Eigen::MatrixXd returns = logs.bottomRows(t_out) - logs.topRows(t_out);

    // A return column whose spread is rounding dust on the log-price scale
    // is constant data; the column-relative check in ReturnPanel::create
    // cannot see that scale, so it is applied here.
    for (Eigen::Index j = 0; j < returns.cols(); ++j) {
        if (t_out < 2) break;
        const double spread = returns.col(j).maxCoeff() - returns.col(j).minCoeff();
        const double log_scale = std::max(1.0, logs.col(j).cwiseAbs().maxCoeff());
        if (spread <= 1e-12 * log_scale) {
            throw DataError("constant returns for asset '" +
                            panel.assets[static_cast<std::size_t>(j)] + "'");
        }
    }
    return ReturnPanel::create(panel.assets, std::move(returns));
}

}  // namespace stocknet
