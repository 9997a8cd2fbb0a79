#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "stocknet/market_data.hpp"

namespace stocknet {

// N x N Pearson correlation matrix. Stored exactly symmetric with a unit
// diagonal; entries clamped to [-1, 1] (overshoot beyond 1e-12 is an error).
struct CorrelationMatrix {
    std::vector<std::string> assets;
    Eigen::MatrixXd rho;

    Eigen::Index size() const { return rho.rows(); }
};

// N x N metric distances d = sqrt(2(1 - rho)), in [0, 2] with zero diagonal.
struct DistanceMatrix {
    std::vector<std::string> assets;
    Eigen::MatrixXd dist;

    Eigen::Index size() const { return dist.rows(); }
};

// Full-sample cross-correlation of return columns, two-pass (demean, then
// cross products). The 1/T' normalization cancels between numerator and
// denominator. Result is validated positive semidefinite.
CorrelationMatrix correlation_matrix(const ReturnPanel& panel);

DistanceMatrix distance_matrix(const CorrelationMatrix& corr);

// N x N dump with asset identifiers as header row and first column.
void write_matrix_csv(std::ostream& out, const std::vector<std::string>& assets,
                      const Eigen::MatrixXd& values);

}  // namespace stocknet
