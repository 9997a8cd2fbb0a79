#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "stocknet/market_data.hpp"

namespace stocknet {

// Parameters of the synthetic K*-factor market with group structure. Each
// asset loads on its group's factor from the dominant range and on every
// other factor from the (strictly lower) off-group range.
struct MarketSpec {
    int n_assets = 30;
    int n_obs = 2000;
    int n_factors = 3;
    std::vector<int> groups;  // empty: contiguous balanced blocks
    double dominant_low = 0.8;
    double dominant_high = 1.2;
    double offgroup_low = 0.0;
    double offgroup_high = 0.1;
    double idio_stddev = 0.5;
    std::uint64_t seed = 42;

    void validate() const;
    std::vector<int> resolved_groups() const;
};

struct SyntheticMarket {
    ReturnPanel panel;
    Eigen::MatrixXd true_betas;    // N x K*
    Eigen::MatrixXd true_factors;  // T' x K*, i.i.d. standard Gaussian
    std::vector<int> groups;
};

// R_j(t) = sum_k beta_jk F_k(t) + sigma eta_j(t), deterministic given the
// seed; betas and idiosyncratic noise come from per-asset substreams.
SyntheticMarket generate_market(const MarketSpec& spec);

// Key-value text config (`n_assets = 50`, `groups = 0,0,1,...`), '#' comments.
MarketSpec parse_market_spec(std::istream& in);

void write_ground_truth_json(std::ostream& out, const MarketSpec& spec,
                             const SyntheticMarket& market);

}  // namespace stocknet
