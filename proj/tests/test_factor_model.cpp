#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

#include "stocknet/errors.hpp"
#include "stocknet/factor_model.hpp"
#include "test_support.hpp"

using namespace stocknet;

namespace {

ReturnPanel panel_from(const Eigen::MatrixXd& values) {
    return ReturnPanel::create(oracle::asset_names(static_cast<int>(values.cols())), values);
}

FactorScores scores_from(const Eigen::MatrixXd& scores) {
    return FactorScores{scores, 0.0};
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& scores) {
    Eigen::MatrixXd design(scores.rows(), scores.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(scores.cols()) = scores;
    return design;
}

}  // namespace

TEST_CASE("exact linear data is recovered exactly") {
    const int t = 100;
    const Eigen::MatrixXd factor = oracle::noise_panel(1, t, 1);
    Eigen::MatrixXd returns(t, 1);
    returns.col(0) = (0.001 + 0.8 * factor.col(0).array()).matrix();

    const FactorModelFit fit = fit_factor_model(panel_from(returns), scores_from(factor));
    CHECK(fit.alpha(0) == doctest::Approx(0.001).epsilon(1e-10));
    CHECK(fit.beta(0, 0) == doctest::Approx(0.8).epsilon(1e-10));
    CHECK(fit.residuals.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(fit.r_squared(0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("white noise yields coefficients within three standard errors") {
    const int t = 4000;
    const int k = 2;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Eigen::MatrixXd scores = oracle::noise_panel(100 + seed, t, k);
        const Eigen::MatrixXd noise = oracle::noise_panel(200 + seed, t, 1, 0.02);
        const FactorModelFit fit = fit_factor_model(panel_from(noise), scores_from(scores));

        // OLS standard errors computed independently from the design.
        const Eigen::MatrixXd design = with_intercept(scores);
        const Eigen::MatrixXd xtx_inv =
            (design.transpose() * design).ldlt().solve(Eigen::MatrixXd::Identity(k + 1, k + 1));
        const double sigma2 = fit.residuals.col(0).squaredNorm() / static_cast<double>(t - k - 1);
        for (int f = 0; f < k; ++f) {
            const double se = std::sqrt(sigma2 * xtx_inv(f + 1, f + 1));
            CHECK(std::abs(fit.beta(0, f)) < 3.0 * se);
        }
    }
}

TEST_CASE("coefficients match an independent normal-equations solve") {
    const int t = 500;
    const int n = 6;
    const int k = 2;
    const Eigen::MatrixXd scores = oracle::noise_panel(31, t, k);
    Eigen::MatrixXd betas(n, k);
    stocknet::rng::Engine engine(32);
    for (int j = 0; j < n; ++j) {
        betas(j, 0) = engine.uniform(0.2, 1.2);
        betas(j, 1) = engine.uniform(-0.5, 0.5);
    }
    const Eigen::MatrixXd returns =
        scores * betas.transpose() + oracle::noise_panel(33, t, n, 0.3);

    const FactorModelFit fit = fit_factor_model(panel_from(returns), scores_from(scores));

    const Eigen::MatrixXd design = with_intercept(scores);
    const Eigen::MatrixXd expected =
        (design.transpose() * design).ldlt().solve(design.transpose() * returns);
    CHECK((fit.alpha - expected.row(0).transpose()).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((fit.beta - expected.bottomRows(k).transpose()).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("normal-equation identities hold on every fit") {
    const int t = 800;
    const Eigen::MatrixXd scores = oracle::noise_panel(41, t, 3);
    const Eigen::MatrixXd returns =
        scores * oracle::noise_panel(42, 4, 3).transpose() + oracle::noise_panel(43, t, 4, 0.5);
    const ReturnPanel panel = panel_from(returns);
    const FactorModelFit fit = fit_factor_model(panel, scores_from(scores));

    for (int j = 0; j < 4; ++j) {
        CHECK(std::abs(fit.residuals.col(j).mean()) <= 1e-10);
        for (int k = 0; k < 3; ++k) {
            const double dot = fit.residuals.col(j).dot(scores.col(k));
            CHECK(std::abs(dot) <= 1e-8 * t);
        }
        // Reconstruction R = alpha + beta F + eps, elementwise.
        const Eigen::VectorXd rebuilt = Eigen::VectorXd::Constant(t, fit.alpha(j)) +
                                        scores * fit.beta.row(j).transpose() +
                                        fit.residuals.col(j);
        CHECK((rebuilt - returns.col(j)).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("R^2 never decreases when a nested factor is added") {
    const int t = 600;
    const Eigen::MatrixXd scores = oracle::noise_panel(51, t, 2);
    const Eigen::MatrixXd returns =
        scores * oracle::noise_panel(52, 5, 2).transpose() + oracle::noise_panel(53, t, 5, 0.4);
    const ReturnPanel panel = panel_from(returns);

    const FactorModelFit narrow = fit_factor_model(panel, scores_from(scores.leftCols(1)));
    const FactorModelFit wide = fit_factor_model(panel, scores_from(scores));
    for (int j = 0; j < 5; ++j) {
        CHECK(wide.r_squared(j) >= narrow.r_squared(j) - 1e-12);
    }
}

TEST_CASE("collinear factors are named in the error") {
    const int t = 200;
    Eigen::MatrixXd scores(t, 2);
    scores.col(0) = oracle::noise_panel(61, t, 1);
    scores.col(1) = scores.col(0);
    const Eigen::MatrixXd returns = oracle::noise_panel(62, t, 2, 0.1);
    CHECK_THROWS_WITH_AS(fit_factor_model(panel_from(returns), scores_from(scores)),
                         doctest::Contains("factors 1 and 2 are collinear"), NumericError);
}

TEST_CASE("shape preconditions") {
    const Eigen::MatrixXd returns = oracle::noise_panel(71, 4, 2, 0.1);
    const Eigen::MatrixXd scores = oracle::noise_panel(72, 4, 3);
    CHECK_THROWS_WITH_AS(fit_factor_model(panel_from(returns), scores_from(scores)),
                         doctest::Contains("more observations"), DataError);
}

TEST_CASE("zero noise stddev makes combined identical to explained") {
    // Build returns as exactly the model prediction, so residuals are
    // bitwise zero and the fresh noise has zero mean and stddev.
    const int t = 50;
    const Eigen::MatrixXd scores = oracle::noise_panel(81, t, 2);
    FactorModelFit fit;
    fit.alpha = Eigen::VectorXd::Constant(3, 0.001);
    fit.beta = oracle::noise_panel(82, 3, 2);
    fit.residuals = Eigen::MatrixXd::Zero(t, 3);
    fit.r_squared = Eigen::VectorXd::Ones(3);

    const Eigen::MatrixXd explained =
        with_intercept(scores) *
        (Eigen::MatrixXd(3, 3) << fit.alpha.transpose(), fit.beta.transpose()).finished();
    const DerivedReturns derived =
        derive_returns(panel_from(explained), fit, scores_from(scores), 7, NoiseMode::Residual);
    CHECK(oracle::bitwise_equal(derived.combined, derived.explained));
    CHECK(derived.random.cwiseAbs().maxCoeff() == 0.0);
    CHECK(derived.residual.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("residual noise mode preserves per-asset variance") {
    const int t = 2000;
    const int n = 8;
    const Eigen::MatrixXd scores = oracle::noise_panel(91, t, 2);
    const Eigen::MatrixXd returns =
        scores * oracle::noise_panel(92, n, 2).transpose() + oracle::noise_panel(93, t, n, 0.6);
    const ReturnPanel panel = panel_from(returns);
    const FactorModelFit fit = fit_factor_model(panel, scores_from(scores));

    double ratio_sum = 0.0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const DerivedReturns derived =
            derive_returns(panel, fit, scores_from(scores), seed, NoiseMode::Residual);
        CHECK(oracle::bitwise_equal(derived.combined, derived.explained + derived.random));
        CHECK(oracle::bitwise_equal(derived.residual, panel.returns - derived.explained));
        for (int j = 0; j < n; ++j) {
            ratio_sum += oracle::sample_variance(derived.combined.col(j)) /
                         oracle::sample_variance(panel.returns.col(j));
            ++count;
        }
    }
    CHECK(ratio_sum / count == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("raw noise mode draws from the original return moments") {
    const int t = 5000;
    const Eigen::MatrixXd scores = oracle::noise_panel(94, t, 1);
    Eigen::MatrixXd returns(t, 1);
    returns.col(0) = (0.5 * scores.col(0).array() + 0.01).matrix();
    const Eigen::MatrixXd noise = oracle::noise_panel(95, t, 1, 0.2);
    returns.col(0) += noise.col(0);
    const ReturnPanel panel = panel_from(returns);
    const FactorModelFit fit = fit_factor_model(panel, scores_from(scores));

    const DerivedReturns derived =
        derive_returns(panel, fit, scores_from(scores), 3, NoiseMode::Raw);
    const double target_mean = panel.returns.col(0).mean();
    const double target_var = oracle::sample_variance(panel.returns.col(0));
    CHECK(derived.random.col(0).mean() == doctest::Approx(target_mean).epsilon(0.2));
    CHECK(oracle::sample_variance(derived.random.col(0)) ==
          doctest::Approx(target_var).epsilon(0.1));
}

TEST_CASE("derived panels are reproducible by seed") {
    const int t = 300;
    const Eigen::MatrixXd scores = oracle::noise_panel(96, t, 2);
    const Eigen::MatrixXd returns =
        scores * oracle::noise_panel(97, 4, 2).transpose() + oracle::noise_panel(98, t, 4, 0.3);
    const ReturnPanel panel = panel_from(returns);
    const FactorModelFit fit = fit_factor_model(panel, scores_from(scores));

    const DerivedReturns first = derive_returns(panel, fit, scores_from(scores), 12345);
    const DerivedReturns second = derive_returns(panel, fit, scores_from(scores), 12345);
    const DerivedReturns other = derive_returns(panel, fit, scores_from(scores), 54321);
    CHECK(oracle::bitwise_equal(first.random, second.random));
    CHECK(!oracle::bitwise_equal(first.random, other.random));
}

TEST_CASE("noise mode parsing") {
    CHECK(parse_noise_mode("residual") == NoiseMode::Residual);
    CHECK(parse_noise_mode("raw") == NoiseMode::Raw);
    CHECK_THROWS_WITH_AS(parse_noise_mode("bogus"), doctest::Contains("invalid noise mode"),
                         DataError);
}

TEST_CASE("fit CSV header carries one beta column per factor") {
    const int t = 100;
    const Eigen::MatrixXd scores = oracle::noise_panel(99, t, 2);
    const Eigen::MatrixXd returns =
        scores * oracle::noise_panel(100, 3, 2).transpose() + oracle::noise_panel(101, t, 3, 0.2);
    const ReturnPanel panel = panel_from(returns);
    const FactorModelFit fit = fit_factor_model(panel, scores_from(scores));

    std::ostringstream out;
    write_fit_csv(out, panel.assets, fit);
    const std::string text = out.str();
    CHECK(text.substr(0, text.find('\n')) == "asset,alpha,beta_1,beta_2,r_squared");
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);  // header + 3 assets
}
