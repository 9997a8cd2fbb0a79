#include "stocknet/factor_analysis.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <ostream>

#include "stocknet/csv.hpp"
#include "stocknet/errors.hpp"

namespace stocknet {

namespace {

constexpr double kVarimaxTolerance = 1e-10;
constexpr int kVarimaxMaxSweeps = 1000;
constexpr double kInvertibilityFloor = 1e-10;

// Varimax criterion: per-factor variance of squared loadings.
double varimax_criterion(const Eigen::MatrixXd& loadings) {
    const double n = static_cast<double>(loadings.rows());
    double value = 0.0;
    for (Eigen::Index k = 0; k < loadings.cols(); ++k) {
        const Eigen::ArrayXd sq = loadings.col(k).array().square();
        const double mean_sq = sq.sum() / n;
        value += sq.square().sum() / n - mean_sq * mean_sq;
    }
    return value;
}

// Standardize columns to mean 0 and unit sample variance (ddof = 1).
Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& data) {
    const Eigen::Index t = data.rows();
    Eigen::MatrixXd z = data.rowwise() - data.colwise().mean();
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const double sd = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(t - 1));
        if (sd <= 0.0) throw NumericError("zero variance while standardizing column");
        z.col(j) /= sd;
    }
    return z;
}

double mean_abs_pairwise_correlation(const Eigen::MatrixXd& standardized) {
    const Eigen::Index k = standardized.cols();
    if (k < 2) return 0.0;
    const Eigen::MatrixXd corr =
        standardized.transpose() * standardized / static_cast<double>(standardized.rows() - 1);
    double sum = 0.0;
    int pairs = 0;
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = i + 1; j < k; ++j) {
            sum += std::abs(corr(i, j));
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

}  // namespace

EigenSystem eigen_decompose(const CorrelationMatrix& corr) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(corr.rho);
    if (solver.info() != Eigen::Success) {
        throw NumericError("eigendecomposition of correlation matrix failed to converge");
    }
    const Eigen::Index n = corr.size();

    // Eigen returns ascending order; flip to descending.
    EigenSystem eigen;
    eigen.eigenvalues = solver.eigenvalues().reverse();
    eigen.eigenvectors = solver.eigenvectors().rowwise().reverse();

    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index max_row = 0;
        eigen.eigenvectors.col(k).cwiseAbs().maxCoeff(&max_row);
        if (eigen.eigenvectors(max_row, k) < 0.0) eigen.eigenvectors.col(k) = -eigen.eigenvectors.col(k);
    }

    const double trace_gap = std::abs(eigen.eigenvalues.sum() - static_cast<double>(n));
    if (trace_gap > 1e-8) {
        throw NumericError("eigenvalue sum deviates from trace by " + csv::format_double(trace_gap));
    }
    if (eigen.eigenvalues.minCoeff() < -1e-8) {
        throw NumericError("negative eigenvalue " + csv::format_double(eigen.eigenvalues.minCoeff()) +
                           " in correlation spectrum");
    }
    return eigen;
}

int kaiser_count(const EigenSystem& eigen) {
    int count = 0;
    for (Eigen::Index k = 0; k < eigen.eigenvalues.size(); ++k) {
        if (eigen.eigenvalues(k) > 1.0) ++count;
    }
    if (count == 0) throw NumericError("no significant factors: no eigenvalue exceeds 1");
    return count;
}

FactorLoadings varimax_rotate(const Eigen::MatrixXd& unrotated) {
    const Eigen::Index n = unrotated.rows();
    const Eigen::Index k = unrotated.cols();
    if (k < 1) throw NumericError("varimax needs at least one factor");
    if (k == 1) {
        return FactorLoadings{unrotated, Eigen::MatrixXd::Identity(1, 1)};
    }

    // Kaiser normalization: rows scaled to unit communality. Row scaling
    // commutes with the column rotations, so the accumulated rotation also
    // applies to the unnormalized loadings.
    Eigen::VectorXd communality = unrotated.rowwise().norm();
    Eigen::VectorXd row_scale(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        row_scale(j) = communality(j) > 1e-12 ? 1.0 / communality(j) : 0.0;
    }
    Eigen::MatrixXd work = row_scale.asDiagonal() * unrotated;
    Eigen::MatrixXd rotation = Eigen::MatrixXd::Identity(k, k);

    const double nd = static_cast<double>(n);
    double criterion = varimax_criterion(work);
    double delta = 0.0;
    bool converged = false;
    for (int sweep = 0; sweep < kVarimaxMaxSweeps; ++sweep) {
        for (Eigen::Index p = 0; p < k - 1; ++p) {
            for (Eigen::Index q = p + 1; q < k; ++q) {
                const Eigen::ArrayXd x = work.col(p).array();
                const Eigen::ArrayXd y = work.col(q).array();
                const Eigen::ArrayXd u = x.square() - y.square();
                const Eigen::ArrayXd v = 2.0 * x * y;
                const double a = u.sum();
                const double b = v.sum();
                const double c = (u.square() - v.square()).sum();
                const double d = 2.0 * (u * v).sum();
                const double numerator = d - 2.0 * a * b / nd;
                const double denominator = c - (a * a - b * b) / nd;
                const double angle = 0.25 * std::atan2(numerator, denominator);
                if (std::abs(angle) < 1e-15) continue;

                const double cs = std::cos(angle);
                const double sn = std::sin(angle);
                const Eigen::VectorXd xp = cs * work.col(p) + sn * work.col(q);
                const Eigen::VectorXd yp = -sn * work.col(p) + cs * work.col(q);
                work.col(p) = xp;
                work.col(q) = yp;
                const Eigen::VectorXd rp = cs * rotation.col(p) + sn * rotation.col(q);
                const Eigen::VectorXd rq = -sn * rotation.col(p) + cs * rotation.col(q);
                rotation.col(p) = rp;
                rotation.col(q) = rq;
            }
        }
        const double updated = varimax_criterion(work);
        delta = updated - criterion;
        if (delta < -1e-12) {
            throw NumericError("varimax criterion decreased by " + csv::format_double(-delta) +
                               " in sweep " + std::to_string(sweep + 1));
        }
        criterion = updated;
        if (delta < kVarimaxTolerance) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw NumericError("varimax did not converge in " + std::to_string(kVarimaxMaxSweeps) +
                           " sweeps (last improvement " + csv::format_double(delta) + ")");
    }

    return FactorLoadings{unrotated * rotation, std::move(rotation)};
}

FactorScores factor_scores(const ReturnPanel& panel, const FactorLoadings& loadings,
                           const CorrelationMatrix& corr, ScoreMethod method) {
    if (loadings.factor_count() < 1) throw NumericError("factor scores need at least one factor");
    if (loadings.loadings.rows() != corr.size() || corr.size() != panel.n_assets()) {
        throw DataError("loadings, correlation matrix and panel disagree on asset count");
    }

    const Eigen::MatrixXd z = standardize_columns(panel.returns);

    Eigen::MatrixXd weights;
    if (method == ScoreMethod::Regression) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(corr.rho);
        if (solver.info() != Eigen::Success) {
            throw NumericError("eigendecomposition failed while inverting correlation matrix");
        }
        if (solver.eigenvalues().minCoeff() <= kInvertibilityFloor) {
            throw NumericError(
                "singular correlation matrix (min eigenvalue " +
                csv::format_double(solver.eigenvalues().minCoeff()) +
                "): use fewer assets or more observations, or the projection score method");
        }
        weights = solver.eigenvectors() *
                  solver.eigenvalues().cwiseInverse().asDiagonal() *
                  solver.eigenvectors().transpose() * loadings.loadings;
    } else {
        weights = loadings.loadings;
    }

    FactorScores scores;
    scores.scores = standardize_columns(z * weights);
    scores.mean_abs_correlation = mean_abs_pairwise_correlation(scores.scores);
    return scores;
}

FactorExtraction extract_factors(const ReturnPanel& panel, std::optional<int> k,
                                 ScoreMethod method) {
    const CorrelationMatrix corr = correlation_matrix(panel);
    EigenSystem eigen = eigen_decompose(corr);

    int factor_count = 0;
    if (k.has_value()) {
        factor_count = *k;
        if (factor_count < 1 || factor_count > static_cast<int>(panel.n_assets())) {
            throw DataError("factor count " + std::to_string(factor_count) + " outside 1..N=" +
                            std::to_string(panel.n_assets()));
        }
    } else {
        factor_count = kaiser_count(eigen);
    }

    // Principal-component loadings: v_k * sqrt(lambda_k). Eigenvalues past
    // the PSD tolerance are clamped at zero before the square root.
    Eigen::MatrixXd unrotated(panel.n_assets(), factor_count);
    for (int col = 0; col < factor_count; ++col) {
        const double lambda = std::max(0.0, eigen.eigenvalues(col));
        unrotated.col(col) = eigen.eigenvectors.col(col) * std::sqrt(lambda);
    }

    FactorExtraction extraction;
    extraction.loadings = varimax_rotate(unrotated);
    extraction.scores = factor_scores(panel, extraction.loadings, corr, method);
    extraction.eigen = std::move(eigen);
    return extraction;
}

void write_loadings_csv(std::ostream& out, const std::vector<std::string>& assets,
                        const FactorLoadings& loadings) {
    out << "asset";
    for (int k = 1; k <= loadings.factor_count(); ++k) out << ",factor_" << k;
    out << '\n';
    for (Eigen::Index j = 0; j < loadings.loadings.rows(); ++j) {
        out << assets[static_cast<std::size_t>(j)];
        for (Eigen::Index k = 0; k < loadings.loadings.cols(); ++k) {
            out << ',' << csv::format_double(loadings.loadings(j, k));
        }
        out << '\n';
    }
}

void write_scores_csv(std::ostream& out, const FactorScores& scores) {
    out << "t";
    for (int k = 1; k <= scores.factor_count(); ++k) out << ",factor_" << k;
    out << '\n';
    for (Eigen::Index t = 0; t < scores.scores.rows(); ++t) {
        out << t;
        for (Eigen::Index k = 0; k < scores.scores.cols(); ++k) {
            out << ',' << csv::format_double(scores.scores(t, k));
        }
        out << '\n';
    }
}

}  // namespace stocknet
