#include "stocknet/factor_model.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <ostream>

#include "stocknet/csv.hpp"
#include "stocknet/errors.hpp"
#include "stocknet/rng.hpp"

namespace stocknet {

namespace {

Eigen::MatrixXd design_matrix(const FactorScores& scores) {
    const Eigen::Index t = scores.scores.rows();
    Eigen::MatrixXd design(t, scores.scores.cols() + 1);
    design.col(0) = Eigen::VectorXd::Ones(t);
    design.rightCols(scores.scores.cols()) = scores.scores;
    return design;
}

// On rank failure, name the most collinear factor pair; this is the
// multicollinearity the varimax-rotated scores are meant to prevent.
[[noreturn]] void throw_collinear(const FactorScores& scores, double smin, double smax) {
    const Eigen::Index k = scores.scores.cols();
    const Eigen::MatrixXd corr =
        scores.scores.transpose() * scores.scores / static_cast<double>(scores.scores.rows() - 1);
    Eigen::Index worst_i = 0, worst_j = 1;
    double worst = -1.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = i + 1; j < k; ++j) {
            if (std::abs(corr(i, j)) > worst) {
                worst = std::abs(corr(i, j));
                worst_i = i;
                worst_j = j;
            }
        }
    }
    std::string detail = k >= 2 ? "factors " + std::to_string(worst_i + 1) + " and " +
                                      std::to_string(worst_j + 1) + " are collinear (|corr|=" +
                                      csv::format_double(worst) + ")"
                                : "a factor is constant";
    throw NumericError("rank-deficient design matrix (min/max singular value " +
                       csv::format_double(smin) + "/" + csv::format_double(smax) + "): " + detail);
}

}  // namespace

FactorModelFit fit_factor_model(const ReturnPanel& panel, const FactorScores& scores) {
    const Eigen::Index t = panel.n_obs();
    const Eigen::Index n = panel.n_assets();
    const Eigen::Index k = scores.scores.cols();
    if (scores.scores.rows() != t) {
        throw DataError("factor scores and return panel disagree on observation count");
    }
    if (k + 1 >= t) {
        throw DataError("need more observations than regressors: K+1=" + std::to_string(k + 1) +
                        ", T'=" + std::to_string(t));
    }

    const Eigen::MatrixXd design = design_matrix(scores);

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (smin <= 1e-10 * smax) throw_collinear(scores, smin, smax);

    // One QR of the shared design solves all N assets at once.
    const Eigen::MatrixXd coeffs = design.colPivHouseholderQr().solve(panel.returns);

    FactorModelFit fit;
    fit.alpha = coeffs.row(0).transpose();
    fit.beta = coeffs.bottomRows(k).transpose();
    fit.residuals = panel.returns - design * coeffs;
    fit.r_squared.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double mean = panel.returns.col(j).mean();
        const double ss_tot = (panel.returns.col(j).array() - mean).square().sum();
        const double ss_res = fit.residuals.col(j).squaredNorm();
        fit.r_squared(j) = 1.0 - ss_res / ss_tot;
    }
    return fit;
}

DerivedReturns derive_returns(const ReturnPanel& panel, const FactorModelFit& fit,
                              const FactorScores& scores, std::uint64_t seed,
                              NoiseMode noise_mode) {
    const Eigen::Index t = panel.n_obs();
    const Eigen::Index n = panel.n_assets();
    if (fit.beta.rows() != n || scores.scores.rows() != t ||
        fit.beta.cols() != scores.scores.cols()) {
        throw DataError("fit, scores and panel shapes disagree");
    }

    DerivedReturns derived;
    derived.seed = seed;
    derived.explained = design_matrix(scores) *
                        (Eigen::MatrixXd(fit.beta.cols() + 1, n) << fit.alpha.transpose(),
                         fit.beta.transpose())
                            .finished();
    derived.residual = panel.returns - derived.explained;

    derived.random.resize(t, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::VectorXd source = noise_mode == NoiseMode::Residual
                                           ? derived.residual.col(j)
                                           : panel.returns.col(j).eval();
        const double mean = source.mean();
        const double sd =
            std::sqrt((source.array() - mean).square().sum() / static_cast<double>(t - 1));
        rng::Engine engine(rng::substream(seed, static_cast<std::uint64_t>(j)));
        for (Eigen::Index row = 0; row < t; ++row) {
            derived.random(row, j) = engine.normal(mean, sd);
        }
    }
    derived.combined = derived.explained + derived.random;
    return derived;
}

void write_fit_csv(std::ostream& out, const std::vector<std::string>& assets,
                   const FactorModelFit& fit) {
    out << "asset,alpha";
    for (int k = 1; k <= fit.factor_count(); ++k) out << ",beta_" << k;
    out << ",r_squared\n";
    for (Eigen::Index j = 0; j < fit.beta.rows(); ++j) {
        out << assets[static_cast<std::size_t>(j)] << ',' << csv::format_double(fit.alpha(j));
        for (Eigen::Index k = 0; k < fit.beta.cols(); ++k) {
            out << ',' << csv::format_double(fit.beta(j, k));
        }
        out << ',' << csv::format_double(fit.r_squared(j)) << '\n';
    }
}

NoiseMode parse_noise_mode(const std::string& name) {
    if (name == "residual") return NoiseMode::Residual;
    if (name == "raw") return NoiseMode::Raw;
    throw DataError("invalid noise mode '" + name + "' (expected 'residual' or 'raw')");
}

const char* noise_mode_name(NoiseMode mode) {
    return mode == NoiseMode::Residual ? "residual" : "raw";
}

}  // namespace stocknet
