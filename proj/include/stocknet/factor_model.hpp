#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>

#include "stocknet/factor_analysis.hpp"
#include "stocknet/market_data.hpp"

namespace stocknet {

// Per-asset least-squares fit of returns on an intercept plus K factor-score
// series: R_j(t) = alpha_j + sum_k beta_jk F_k(t) + eps_j(t).
struct FactorModelFit {
    Eigen::VectorXd alpha;      // N
    Eigen::MatrixXd beta;       // N x K
    Eigen::MatrixXd residuals;  // T' x N
    Eigen::VectorXd r_squared;  // N

    int factor_count() const { return static_cast<int>(beta.cols()); }
};

// Distribution moments of the fresh random component:
//   Residual: mean/stddev of each asset's fit residuals (variance preserving)
//   Raw: mean/stddev of the asset's original returns
enum class NoiseMode { Residual, Raw };

// The derived return panels: factor-explained, random, their sum, and the
// fit residual. combined = explained + random holds exactly elementwise.
struct DerivedReturns {
    Eigen::MatrixXd explained;
    Eigen::MatrixXd random;
    Eigen::MatrixXd combined;
    Eigen::MatrixXd residual;
    std::uint64_t seed = 0;
};

FactorModelFit fit_factor_model(const ReturnPanel& panel, const FactorScores& scores);

// The random panel is drawn i.i.d. Gaussian per asset from substreams keyed
// on (seed, asset index), so generation order never affects the output.
DerivedReturns derive_returns(const ReturnPanel& panel, const FactorModelFit& fit,
                              const FactorScores& scores, std::uint64_t seed,
                              NoiseMode noise_mode = NoiseMode::Residual);

// `asset,alpha,beta_1..beta_K,r_squared`
void write_fit_csv(std::ostream& out, const std::vector<std::string>& assets,
                   const FactorModelFit& fit);

NoiseMode parse_noise_mode(const std::string& name);
const char* noise_mode_name(NoiseMode mode);

}  // namespace stocknet
