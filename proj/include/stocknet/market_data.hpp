#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace stocknet {

// T x N panel of strictly positive prices. Timestamps are opaque ordered
// labels; rows with missing cells are dropped at load time.
struct PricePanel {
    std::vector<std::string> assets;
    std::vector<std::string> timestamps;
    Eigen::MatrixXd prices;

    // Validates positivity, shape, label uniqueness/order and T >= 2.
    static PricePanel create(std::vector<std::string> assets,
                             std::vector<std::string> timestamps, Eigen::MatrixXd prices);

    Eigen::Index n_assets() const { return prices.cols(); }
    Eigen::Index n_obs() const { return prices.rows(); }
};

// T' x N panel of log-returns. Columns must be finite with nonzero sample
// variance; a constant column would make the correlation undefined.
struct ReturnPanel {
    std::vector<std::string> assets;
    Eigen::MatrixXd returns;

    static ReturnPanel create(std::vector<std::string> assets, Eigen::MatrixXd returns);

    Eigen::Index n_assets() const { return returns.cols(); }
    Eigen::Index n_obs() const { return returns.rows(); }
};

struct LoadReport {
    int rows_dropped = 0;
};

// Reads the wide CSV format (`date,<asset...>`). Rows containing an empty
// cell are dropped and counted in `report`.
PricePanel load_prices(std::istream& in, LoadReport* report = nullptr);

// Same format, but cells are returns: no positivity requirement, no log-diff.
ReturnPanel load_returns(std::istream& in, LoadReport* report = nullptr);

// returns[t][j] = ln(prices[t+1][j]) - ln(prices[t][j]).
ReturnPanel to_log_returns(const PricePanel& panel);

}  // namespace stocknet
