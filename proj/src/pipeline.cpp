#include "stocknet/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "stocknet/csv.hpp"
#include "stocknet/errors.hpp"
#include "stocknet/factor_analysis.hpp"
#include "stocknet/rng.hpp"

namespace stocknet {

namespace {

// Noise seed for one replicate. Replicates are independent; the same
// replicate reuses its seed across factor counts (common random numbers),
// so differences between adjacent k reflect the model change rather than
// a fresh noise draw.
std::uint64_t replicate_seed(std::uint64_t seed, int replicate) {
    return rng::substream(seed, static_cast<std::uint64_t>(replicate));
}

Tree tree_from_returns(const ReturnPanel& panel) {
    return build_mst(distance_matrix(correlation_matrix(panel)));
}

// Ratios of `curve` sampled at the grid thresholds (thresholds are 1-based
// positions into the full curve).
Eigen::VectorXd sample_curve(const SurvivorCurve& curve, const std::vector<int>& thresholds) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(thresholds.size()));
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = curve.ratios[static_cast<std::size_t>(thresholds[i] - 1)];
    }
    return out;
}

void run_jobs(int n_jobs, int threads, const std::function<void(int)>& job) {
    if (threads <= 1 || n_jobs <= 1) {
        for (int i = 0; i < n_jobs; ++i) job(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= n_jobs) return;
            try {
                job(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min(threads, n_jobs);
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::vector<int> threshold_axis(const Tree& reference, bool full_range) {
    const int max_degree = reference.max_degree();
    int last = max_degree;
    if (!full_range) {
        std::set<int, std::greater<int>> distinct(reference.degree.begin(), reference.degree.end());
        if (distinct.size() >= 2) last = *std::next(distinct.begin()) + 1;
    }
    std::vector<int> axis;
    axis.reserve(static_cast<std::size_t>(last));
    for (int i = 1; i <= last; ++i) axis.push_back(i);
    return axis;
}

SweepGrid run_sweep(const ReturnPanel& panel, const SweepOptions& options) {
    if (options.replicates < 1) throw DataError("sweep needs replicates >= 1");

    const Tree original = tree_from_returns(panel);

    int k_max = 0;
    if (options.k_max.has_value()) {
        k_max = *options.k_max;
        if (k_max < 1) throw DataError("sweep needs K_max >= 1");
    } else {
        k_max = kaiser_count(eigen_decompose(correlation_matrix(panel)));
    }

    SweepGrid grid;
    grid.thresholds = threshold_axis(original, options.full_threshold_axis);
    grid.eligible_counts.reserve(grid.thresholds.size());
    for (const int i : grid.thresholds) {
        int count = 0;
        for (const int deg : original.degree) {
            if (deg >= i) ++count;
        }
        grid.eligible_counts.push_back(count);
    }
    grid.factor_counts.reserve(static_cast<std::size_t>(k_max));
    for (int k = 1; k <= k_max; ++k) grid.factor_counts.push_back(k);
    grid.replicates = options.replicates;

    const Eigen::Index n_thresholds = static_cast<Eigen::Index>(grid.thresholds.size());
    grid.estimated.resize(k_max, n_thresholds);
    grid.residual.resize(k_max, n_thresholds);
    grid.estimated_reps.assign(static_cast<std::size_t>(k_max),
                               Eigen::MatrixXd(options.replicates, n_thresholds));

    // One job per factor count; each job owns its row of every output.
    auto run_cell = [&](int index) {
        const int k = grid.factor_counts[static_cast<std::size_t>(index)];
        int replicate_done = -1;
        try {
            const FactorExtraction extraction = extract_factors(panel, k, options.score_method);
            const FactorModelFit fit = fit_factor_model(panel, extraction.scores);

            // Residual network: deterministic per k, no noise involved.
            const ReturnPanel residual_panel = ReturnPanel::create(panel.assets, fit.residuals);
            const Tree residual_tree = tree_from_returns(residual_panel);
            grid.residual.row(index) =
                sample_curve(survivor_curve(original, residual_tree, options.averaging),
                             grid.thresholds)
                    .transpose();

            for (int rep = 0; rep < options.replicates; ++rep) {
                replicate_done = rep;
                const DerivedReturns derived =
                    derive_returns(panel, fit, extraction.scores,
                                   replicate_seed(options.seed, rep), options.noise_mode);
                const ReturnPanel combined_panel =
                    ReturnPanel::create(panel.assets, derived.combined);
                const Tree estimated_tree = tree_from_returns(combined_panel);
                grid.estimated_reps[static_cast<std::size_t>(index)].row(rep) =
                    sample_curve(survivor_curve(original, estimated_tree, options.averaging),
                                 grid.thresholds)
                        .transpose();
            }
            grid.estimated.row(index) =
                grid.estimated_reps[static_cast<std::size_t>(index)].colwise().mean();
        } catch (const std::exception& e) {
            const std::string where =
                replicate_done < 0 ? "k=" + std::to_string(k)
                                   : "k=" + std::to_string(k) +
                                         ", replicate=" + std::to_string(replicate_done + 1);
            throw NumericError("sweep cell failed (" + where + "): " + e.what());
        }
    };

    int threads = options.threads;
    if (threads == 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads < 1) threads = 1;
    }
    run_jobs(k_max, threads, run_cell);
    return grid;
}

Marginals marginal_means(const SweepGrid& grid) {
    Marginals marginals;
    const Eigen::VectorXd by_k_est = grid.estimated.rowwise().mean();
    const Eigen::VectorXd by_k_res = grid.residual.rowwise().mean();
    const Eigen::RowVectorXd by_i_est = grid.estimated.colwise().mean();
    const Eigen::RowVectorXd by_i_res = grid.residual.colwise().mean();
    marginals.by_k_estimated.assign(by_k_est.begin(), by_k_est.end());
    marginals.by_k_residual.assign(by_k_res.begin(), by_k_res.end());
    marginals.by_threshold_estimated.assign(by_i_est.begin(), by_i_est.end());
    marginals.by_threshold_residual.assign(by_i_res.begin(), by_i_res.end());
    return marginals;
}

void write_grid_csv(std::ostream& out, const SweepGrid& grid) {
    out << "k,threshold,estimated_ratio,residual_ratio,eligible_count\n";
    for (std::size_t row = 0; row < grid.factor_counts.size(); ++row) {
        for (std::size_t col = 0; col < grid.thresholds.size(); ++col) {
            out << grid.factor_counts[row] << ',' << grid.thresholds[col] << ','
                << csv::format_double(grid.estimated(static_cast<Eigen::Index>(row),
                                                     static_cast<Eigen::Index>(col)))
                << ','
                << csv::format_double(grid.residual(static_cast<Eigen::Index>(row),
                                                    static_cast<Eigen::Index>(col)))
                << ',' << grid.eligible_counts[col] << '\n';
        }
    }
}

void write_marginal_by_k_csv(std::ostream& out, const SweepGrid& grid, const Marginals& marginals) {
    out << "k,estimated_ratio,residual_ratio\n";
    for (std::size_t row = 0; row < grid.factor_counts.size(); ++row) {
        out << grid.factor_counts[row] << ',' << csv::format_double(marginals.by_k_estimated[row])
            << ',' << csv::format_double(marginals.by_k_residual[row]) << '\n';
    }
}

void write_marginal_by_threshold_csv(std::ostream& out, const SweepGrid& grid,
                                     const Marginals& marginals) {
    out << "threshold,estimated_ratio,residual_ratio\n";
    for (std::size_t col = 0; col < grid.thresholds.size(); ++col) {
        out << grid.thresholds[col] << ','
            << csv::format_double(marginals.by_threshold_estimated[col]) << ','
            << csv::format_double(marginals.by_threshold_residual[col]) << '\n';
    }
}

}  // namespace stocknet
