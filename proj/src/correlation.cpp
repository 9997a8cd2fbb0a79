#include "stocknet/correlation.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <ostream>

#include "stocknet/csv.hpp"
#include "stocknet/errors.hpp"

namespace stocknet {

namespace {

constexpr double kClampTolerance = 1e-12;

}  // namespace

CorrelationMatrix correlation_matrix(const ReturnPanel& panel) {
    const Eigen::Index n = panel.n_assets();
    const Eigen::Index t = panel.n_obs();
    if (t < 2) throw DataError("correlation needs at least 2 observations");

    const Eigen::RowVectorXd means = panel.returns.colwise().mean();
    const Eigen::MatrixXd centered = panel.returns.rowwise() - means;
    const Eigen::MatrixXd cross = centered.transpose() * centered;

    // Backstop only: ReturnPanel construction already rejects constant
    // columns, so a zero here would indicate a bug upstream.
    Eigen::VectorXd scale(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double var = cross(j, j);
        if (var <= 0.0) {
            throw NumericError("zero-variance column '" + panel.assets[static_cast<std::size_t>(j)] +
                               "' in correlation");
        }
        scale(j) = 1.0 / std::sqrt(var);
    }

    Eigen::MatrixXd rho(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        rho(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double value = cross(i, j) * scale(i) * scale(j);
            if (std::abs(value) > 1.0) {
                const double overshoot = std::abs(value) - 1.0;
                if (overshoot > kClampTolerance) {
                    throw NumericError("correlation overshoot " + csv::format_double(overshoot) +
                                       " between '" + panel.assets[static_cast<std::size_t>(i)] +
                                       "' and '" + panel.assets[static_cast<std::size_t>(j)] + "'");
                }
                value = value > 0.0 ? 1.0 : -1.0;
            }
            rho(i, j) = value;
            rho(j, i) = value;
        }
    }

    // A correlation matrix is a Gram matrix, so eigenvalues below the
    // tolerance indicate a computation bug rather than bad data.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(rho, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericError("eigenvalue check failed to converge on correlation matrix");
    }
    const double min_eig = solver.eigenvalues().minCoeff();
    if (min_eig < -1e-8 * static_cast<double>(n)) {
        throw NumericError("correlation matrix not positive semidefinite (min eigenvalue " +
                           csv::format_double(min_eig) + ")");
    }

    return CorrelationMatrix{panel.assets, std::move(rho)};
}

DistanceMatrix distance_matrix(const CorrelationMatrix& corr) {
    const Eigen::Index n = corr.size();
    Eigen::MatrixXd dist(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        dist(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = std::sqrt(std::max(0.0, 2.0 * (1.0 - corr.rho(i, j))));
            dist(i, j) = d;
            dist(j, i) = d;
        }
    }
    return DistanceMatrix{corr.assets, std::move(dist)};
}

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& assets,
                      const Eigen::MatrixXd& values) {
    out << "asset";
    for (const auto& asset : assets) out << ',' << asset;
    out << '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        out << assets[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            out << ',' << csv::format_double(values(i, j));
        }
        out << '\n';
    }
}

}  // namespace stocknet
