#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>

#include "stocknet/correlation.hpp"
#include "stocknet/market_data.hpp"

namespace stocknet {

// Full symmetric eigendecomposition of a correlation matrix, eigenvalues
// sorted descending. Each eigenvector's sign is fixed so that its
// largest-magnitude component is positive.
struct EigenSystem {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;  // orthonormal columns
};

// N x K loading matrix together with the orthogonal rotation applied to the
// principal-component loadings.
struct FactorLoadings {
    Eigen::MatrixXd loadings;
    Eigen::MatrixXd rotation;

    int factor_count() const { return static_cast<int>(loadings.cols()); }
};

// T' x K factor-score time series, each column standardized to mean 0 and
// unit sample variance.
struct FactorScores {
    Eigen::MatrixXd scores;
    double mean_abs_correlation = 0.0;  // multicollinearity diagnostic

    int factor_count() const { return static_cast<int>(scores.cols()); }
};

// How factor scores are computed from standardized returns Z:
//   Regression (Thomson): Z * rho^-1 * loadings, needs invertible rho.
//   Projection: Z * loadings.
// Either way columns are re-standardized to unit sample variance.
enum class ScoreMethod { Regression, Projection };

EigenSystem eigen_decompose(const CorrelationMatrix& corr);

// Kaiser rule: number of eigenvalues strictly greater than 1.
// Zero significant factors is an error since every consumer needs K >= 1.
int kaiser_count(const EigenSystem& eigen);

// Kaiser-normalized varimax: rows scaled to unit communality, pairwise
// planar rotations maximizing sum_k [ sum_j l^4 / N - (sum_j l^2 / N)^2 ],
// swept until a full sweep improves the criterion by < 1e-10 (cap 1000).
FactorLoadings varimax_rotate(const Eigen::MatrixXd& unrotated);

FactorScores factor_scores(const ReturnPanel& panel, const FactorLoadings& loadings,
                           const CorrelationMatrix& corr,
                           ScoreMethod method = ScoreMethod::Regression);

struct FactorExtraction {
    FactorLoadings loadings;
    FactorScores scores;
    EigenSystem eigen;
};

// Composition: eigendecompose the return correlation matrix, take the top-K
// principal-component loadings (v_k * sqrt(lambda_k)), varimax-rotate, and
// score. `k = nullopt` selects K by the Kaiser rule.
FactorExtraction extract_factors(const ReturnPanel& panel, std::optional<int> k,
                                 ScoreMethod method = ScoreMethod::Regression);

void write_loadings_csv(std::ostream& out, const std::vector<std::string>& assets,
                        const FactorLoadings& loadings);
void write_scores_csv(std::ostream& out, const FactorScores& scores);

}  // namespace stocknet
