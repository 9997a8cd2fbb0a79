#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "stocknet/consistency.hpp"
#include "stocknet/factor_model.hpp"
#include "stocknet/market_data.hpp"
#include "stocknet/mst_network.hpp"

namespace stocknet {

struct SweepOptions {
    std::optional<int> k_max;  // nullopt: Kaiser count of the original panel
    int replicates = 10;
    std::uint64_t seed = 42;
    NoiseMode noise_mode = NoiseMode::Residual;
    Averaging averaging = Averaging::PerNode;
    bool full_threshold_axis = false;
    ScoreMethod score_method = ScoreMethod::Regression;
    int threads = 0;  // 0: hardware concurrency
};

// Mean survivor ratios indexed by (factor count k, degree threshold i).
// `estimated` compares trees built on combined returns against the original
// tree, averaged over noise replicates; `residual` compares the (single,
// deterministic) residual-return tree per k.
struct SweepGrid {
    std::vector<int> factor_counts;
    std::vector<int> thresholds;
    std::vector<int> eligible_counts;  // per threshold, from the original tree
    Eigen::MatrixXd estimated;         // k x i, replicate means
    Eigen::MatrixXd residual;          // k x i
    int replicates = 0;
    std::vector<Eigen::MatrixXd> estimated_reps;  // per k: replicates x i
};

struct Marginals {
    std::vector<double> by_k_estimated;
    std::vector<double> by_k_residual;
    std::vector<double> by_threshold_estimated;
    std::vector<double> by_threshold_residual;
};

// Threshold axis of a reference tree: 1 up to the second-largest distinct
// degree + 1. Beyond that point every eligible set equals the max-degree
// set, so the duplicate tail is collapsed unless `full_range` is set.
std::vector<int> threshold_axis(const Tree& reference, bool full_range = false);

// The full experiment: original tree once, then per factor count k extract
// factors, fit, build one residual tree and `replicates` combined-return
// trees, and collect survivor ratios. Cells run independently; the keyed
// reduction makes parallel and serial execution bitwise identical.
SweepGrid run_sweep(const ReturnPanel& panel, const SweepOptions& options);

Marginals marginal_means(const SweepGrid& grid);

// `k,threshold,estimated_ratio,residual_ratio,eligible_count`
void write_grid_csv(std::ostream& out, const SweepGrid& grid);
void write_marginal_by_k_csv(std::ostream& out, const SweepGrid& grid, const Marginals& marginals);
void write_marginal_by_threshold_csv(std::ostream& out, const SweepGrid& grid,
                                     const Marginals& marginals);

}  // namespace stocknet
