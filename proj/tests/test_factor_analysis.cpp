#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/QR>
#include <cmath>

#include "stocknet/errors.hpp"
#include "stocknet/factor_analysis.hpp"
#include "test_support.hpp"

using namespace stocknet;

namespace {

ReturnPanel panel_from(const Eigen::MatrixXd& values) {
    return ReturnPanel::create(oracle::asset_names(static_cast<int>(values.cols())), values);
}

CorrelationMatrix corr_of(int n, const Eigen::MatrixXd& rho) {
    return CorrelationMatrix{oracle::asset_names(n), rho};
}

// Block-structured factor panel: `per_group` assets load 1.0 on their own
// factor, 0 elsewhere, plus idiosyncratic noise of scale sigma.
Eigen::MatrixXd block_panel(std::uint64_t seed, int t, int k, int per_group, double sigma) {
    const int n = k * per_group;
    const Eigen::MatrixXd factors = oracle::noise_panel(seed, t, k);
    Eigen::MatrixXd betas = Eigen::MatrixXd::Zero(n, k);
    for (int j = 0; j < n; ++j) betas(j, j / per_group) = 1.0;
    return factors * betas.transpose() + oracle::noise_panel(seed + 1, t, n, sigma);
}

Eigen::MatrixXd random_orthogonal(std::uint64_t seed, int k) {
    const Eigen::MatrixXd m = oracle::noise_panel(seed, k, k);
    return Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
}

double criterion_of(const Eigen::MatrixXd& loadings) {
    return oracle::varimax_criterion_normalized(loadings);
}

}  // namespace

TEST_CASE("identity correlation: flat spectrum, no significant factors") {
    const CorrelationMatrix corr = corr_of(5, Eigen::MatrixXd::Identity(5, 5));
    const EigenSystem eigen = eigen_decompose(corr);
    for (int i = 0; i < 5; ++i) CHECK(eigen.eigenvalues(i) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_WITH_AS(kaiser_count(eigen), doctest::Contains("no significant factors"),
                         NumericError);
}

TEST_CASE("equicorrelation spectrum is 1+(N-1)c and 1-c") {
    Eigen::MatrixXd rho = Eigen::MatrixXd::Constant(4, 4, 0.5);
    rho.diagonal().setOnes();
    const EigenSystem eigen = eigen_decompose(corr_of(4, rho));
    CHECK(eigen.eigenvalues(0) == doctest::Approx(2.5).epsilon(1e-10));
    for (int i = 1; i < 4; ++i) CHECK(eigen.eigenvalues(i) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(kaiser_count(eigen) == 1);
}

TEST_CASE("eigendecomposition reconstructs the input") {
    const Eigen::MatrixXd values = oracle::noise_panel(3, 120, 6);
    const CorrelationMatrix corr = correlation_matrix(panel_from(values));
    const EigenSystem eigen = eigen_decompose(corr);

    const Eigen::MatrixXd reconstructed =
        eigen.eigenvectors * eigen.eigenvalues.asDiagonal() * eigen.eigenvectors.transpose();
    CHECK((reconstructed - corr.rho).cwiseAbs().maxCoeff() <= 1e-8);

    const Eigen::MatrixXd gram = eigen.eigenvectors.transpose() * eigen.eigenvectors;
    CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-10);

    for (int i = 1; i < 6; ++i) CHECK(eigen.eigenvalues(i) <= eigen.eigenvalues(i - 1));
    CHECK(eigen.eigenvalues.sum() == doctest::Approx(6.0).epsilon(1e-9));

    // Sign convention: largest-magnitude component positive.
    for (int k = 0; k < 6; ++k) {
        Eigen::Index row = 0;
        eigen.eigenvectors.col(k).cwiseAbs().maxCoeff(&row);
        CHECK(eigen.eigenvectors(row, k) > 0.0);
    }
}

TEST_CASE("eigenvalue sum equals N across panel shapes") {
    for (const auto& [seed, t, n] : {std::tuple{1, 50, 4}, {2, 200, 10}, {3, 30, 8}}) {
        const CorrelationMatrix corr = correlation_matrix(
            panel_from(oracle::noise_panel(static_cast<std::uint64_t>(seed), t, n)));
        const EigenSystem eigen = eigen_decompose(corr);
        CHECK(std::abs(eigen.eigenvalues.sum() - n) <= 1e-8);
    }
}

TEST_CASE("varimax with a single factor is the identity") {
    const Eigen::MatrixXd loadings = oracle::noise_panel(4, 6, 1);
    const FactorLoadings rotated = varimax_rotate(loadings);
    CHECK(oracle::bitwise_equal(rotated.rotation, Eigen::MatrixXd::Identity(1, 1)));
    CHECK(oracle::bitwise_equal(rotated.loadings, loadings));
}

TEST_CASE("perfect simple structure is a varimax fixed point") {
    Eigen::MatrixXd loadings = Eigen::MatrixXd::Zero(6, 2);
    loadings(0, 0) = 0.9;
    loadings(1, 0) = -0.8;
    loadings(2, 0) = 0.7;
    loadings(3, 1) = 0.85;
    loadings(4, 1) = 0.95;
    loadings(5, 1) = -0.75;

    const FactorLoadings rotated = varimax_rotate(loadings);
    // The rotation must be a signed permutation; identity qualifies.
    Eigen::MatrixXd abs_rotation = rotated.rotation.cwiseAbs();
    CHECK((abs_rotation - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(criterion_of(rotated.loadings) == doctest::Approx(criterion_of(loadings)).epsilon(1e-10));
}

TEST_CASE("varimax rotation is orthogonal and preserves communalities and fit") {
    const Eigen::MatrixXd loadings = oracle::noise_panel(21, 8, 3);
    const FactorLoadings rotated = varimax_rotate(loadings);

    const Eigen::MatrixXd gram = rotated.rotation.transpose() * rotated.rotation;
    CHECK((gram - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);

    const Eigen::VectorXd before = loadings.rowwise().squaredNorm();
    const Eigen::VectorXd after = rotated.loadings.rowwise().squaredNorm();
    CHECK((before - after).cwiseAbs().maxCoeff() <= 1e-10);

    const Eigen::MatrixXd fit_before = loadings * loadings.transpose();
    const Eigen::MatrixXd fit_after = rotated.loadings * rotated.loadings.transpose();
    CHECK((fit_before - fit_after).cwiseAbs().maxCoeff() <= 1e-8);

    CHECK(criterion_of(rotated.loadings) >= criterion_of(loadings) - 1e-12);
    CHECK((rotated.loadings - loadings * rotated.rotation).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("varimax optimum is invariant to a random pre-rotation") {
    const Eigen::MatrixXd loadings = oracle::noise_panel(33, 8, 3);
    const FactorLoadings direct = varimax_rotate(loadings);
    const FactorLoadings shuffled = varimax_rotate(loadings * random_orthogonal(5, 3));
    CHECK(criterion_of(shuffled.loadings) ==
          doctest::Approx(criterion_of(direct.loadings)).epsilon(1e-8));
}

TEST_CASE("factor scores recover generative factors") {
    const int t = 600;
    const int per_group = 4;
    // Orthonormalized factor pair, then block loadings.
    Eigen::MatrixXd raw = oracle::noise_panel(8, t, 2);
    Eigen::MatrixXd factors = Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ() *
                              Eigen::MatrixXd::Identity(t, 2);
    factors *= std::sqrt(static_cast<double>(t));  // unit-ish variance columns

    Eigen::MatrixXd betas = Eigen::MatrixXd::Zero(2 * per_group, 2);
    for (int j = 0; j < 2 * per_group; ++j) betas(j, j / per_group) = 1.0 + 0.05 * j;

    auto check_recovery = [&](const Eigen::MatrixXd& returns, ScoreMethod method,
                              double min_corr) {
        const ReturnPanel panel = panel_from(returns);
        const FactorExtraction extraction = extract_factors(panel, 2, method);
        // Each true factor must be matched by some score column up to sign.
        for (int truth = 0; truth < 2; ++truth) {
            double best = 0.0;
            for (int k = 0; k < 2; ++k) {
                best = std::max(best, std::abs(oracle::naive_correlation(
                                          factors.col(truth), extraction.scores.scores.col(k))));
            }
            CHECK(best >= min_corr);
        }
    };

    SUBCASE("projection method on exactly rank-2 data") {
        check_recovery(factors * betas.transpose(), ScoreMethod::Projection, 0.999);
    }
    SUBCASE("regression method needs an invertible correlation, so tiny noise") {
        const Eigen::MatrixXd returns =
            factors * betas.transpose() + oracle::noise_panel(9, t, 2 * per_group, 0.01);
        check_recovery(returns, ScoreMethod::Regression, 0.999);
    }
    SUBCASE("regression method fails cleanly on singular correlation") {
        const ReturnPanel panel = panel_from(factors * betas.transpose());
        const CorrelationMatrix corr = correlation_matrix(panel);
        const FactorLoadings loadings = varimax_rotate(
            eigen_decompose(corr).eigenvectors.leftCols(2));
        CHECK_THROWS_WITH_AS(factor_scores(panel, loadings, corr, ScoreMethod::Regression),
                             doctest::Contains("singular correlation"), NumericError);
    }
}

TEST_CASE("score columns are standardized") {
    const Eigen::MatrixXd values = block_panel(15, 400, 3, 5, 0.5);
    const FactorExtraction extraction = extract_factors(panel_from(values), 3);
    const Eigen::MatrixXd& scores = extraction.scores.scores;
    for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(scores.col(k).mean()) <= 1e-10);
        CHECK(oracle::sample_variance(scores.col(k)) == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("kaiser selection runs end to end on one-factor data") {
    // Four assets driven by a single factor with idiosyncratic noise of the
    // same scale: population correlation 0.5, so one eigenvalue near 2.5.
    const int t = 2000;
    const Eigen::MatrixXd factor = oracle::noise_panel(61, t, 1);
    Eigen::MatrixXd returns(t, 4);
    const Eigen::MatrixXd noise = oracle::noise_panel(62, t, 4);
    for (int j = 0; j < 4; ++j) returns.col(j) = factor.col(0) + noise.col(j);

    const FactorExtraction extraction = extract_factors(panel_from(returns), std::nullopt);
    CHECK(extraction.scores.factor_count() == 1);
    CHECK(oracle::bitwise_equal(extraction.loadings.rotation, Eigen::MatrixXd::Identity(1, 1)));
}

TEST_CASE("requesting more factors than the data has still works") {
    const Eigen::MatrixXd values = block_panel(44, 1500, 2, 5, 0.4);
    const FactorExtraction extraction = extract_factors(panel_from(values), 3);
    CHECK(extraction.scores.factor_count() == 3);
    // Two dominant eigenvalues; the third explains residual variance only.
    CHECK(extraction.eigen.eigenvalues(1) > 1.0);
    CHECK(extraction.eigen.eigenvalues(2) < 1.0);
    const Eigen::VectorXd strength = extraction.loadings.loadings.colwise().squaredNorm();
    CHECK(strength.minCoeff() == doctest::Approx(strength(2)));
}

TEST_CASE("factor count bounds") {
    const Eigen::MatrixXd values = oracle::noise_panel(5, 60, 4);
    CHECK_THROWS_AS(extract_factors(panel_from(values), 5), DataError);
    CHECK_THROWS_AS(extract_factors(panel_from(values), 0), DataError);
}

TEST_CASE("score decorrelation improves with sample size") {
    // Mean |pairwise correlation| between scores shrinks as T' grows.
    double previous = 1.0;
    for (const int t : {250, 1000, 4000}) {
        double total = 0.0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Eigen::MatrixXd values = block_panel(100 + seed * 7, t, 3, 5, 0.5);
            const FactorExtraction extraction = extract_factors(panel_from(values), 3);
            total += extraction.scores.mean_abs_correlation;
        }
        const double mean = total / 5.0;
        CHECK(mean < previous);
        previous = mean;
    }
    CHECK(previous < 0.05);
}
