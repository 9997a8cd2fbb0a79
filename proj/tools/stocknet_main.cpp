// stocknet: correlation-based MST networks, multi-factor fits and the
// survivor-ratio sweep over factor counts. All numerics live in the
// library; this binary only wires subcommands to files.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "stocknet/consistency.hpp"
#include "stocknet/correlation.hpp"
#include "stocknet/csv.hpp"
#include "stocknet/errors.hpp"
#include "stocknet/factor_analysis.hpp"
#include "stocknet/factor_model.hpp"
#include "stocknet/market_data.hpp"
#include "stocknet/mst_network.hpp"
#include "stocknet/pipeline.hpp"
#include "stocknet/synth_market.hpp"
#include "stocknet/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct RunConfig {
    std::string input;
    bool input_is_returns = false;
    std::string out_dir = ".";
    std::string k_spec = "kaiser";
    int replicates = 10;
    std::uint64_t seed = 42;
    std::string noise_mode = "residual";
    std::string score_method = "regression";
    bool pooled = false;
    bool full_threshold_axis = false;
    int threads = 0;
    bool dump_correlation = false;
    bool dump_distance = false;
};

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw stocknet::DataError("cannot open input file '" + path + "'");
    return in;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw stocknet::DataError("cannot open output file '" + path.string() + "'");
    return out;
}

stocknet::ReturnPanel load_panel(const RunConfig& config, stocknet::LoadReport* report) {
    auto in = open_input(config.input);
    if (config.input_is_returns) return stocknet::load_returns(in, report);
    return stocknet::to_log_returns(stocknet::load_prices(in, report));
}

std::optional<int> parse_k_spec(const std::string& spec) {
    if (spec == "kaiser") return std::nullopt;
    try {
        const int k = std::stoi(spec);
        if (k >= 1) return k;
    } catch (const std::exception&) {
    }
    throw stocknet::DataError("--k must be a positive integer or 'kaiser', got '" + spec + "'");
}

// Every run records its full configuration so it can be reproduced exactly.
json base_manifest(const RunConfig& config, const std::string& command,
                   const stocknet::LoadReport& report) {
    json doc;
    doc["version"] = stocknet::kVersion;
    doc["command"] = command;
    doc["input"] = config.input;
    doc["input_kind"] = config.input_is_returns ? "returns" : "prices";
    doc["rows_dropped"] = report.rows_dropped;
    doc["seed"] = config.seed;
    return doc;
}

void write_manifest(const RunConfig& config, const json& doc) {
    auto out = open_output(fs::path(config.out_dir) / "manifest.json");
    out << doc.dump(2) << '\n';
}

void ensure_out_dir(const RunConfig& config) {
    fs::create_directories(config.out_dir);
}

int cmd_network(const RunConfig& config) {
    ensure_out_dir(config);
    stocknet::LoadReport report;
    const stocknet::ReturnPanel panel = load_panel(config, &report);
    if (report.rows_dropped > 0) {
        std::cerr << "dropped " << report.rows_dropped << " rows with missing data\n";
    }

    const stocknet::CorrelationMatrix corr = stocknet::correlation_matrix(panel);
    const stocknet::DistanceMatrix dist = stocknet::distance_matrix(corr);
    const stocknet::Tree tree = stocknet::build_mst(dist);

    {
        auto out = open_output(fs::path(config.out_dir) / "mst_edges.csv");
        stocknet::write_edges_csv(out, tree);
    }
    {
        auto out = open_output(fs::path(config.out_dir) / "degrees.csv");
        stocknet::write_degrees_csv(out, tree);
    }
    if (config.dump_correlation) {
        auto out = open_output(fs::path(config.out_dir) / "correlation.csv");
        stocknet::write_matrix_csv(out, corr.assets, corr.rho);
    }
    if (config.dump_distance) {
        auto out = open_output(fs::path(config.out_dir) / "distance.csv");
        stocknet::write_matrix_csv(out, dist.assets, dist.dist);
    }

    json manifest = base_manifest(config, "network", report);
    manifest["n_assets"] = panel.n_assets();
    manifest["n_obs"] = panel.n_obs();
    manifest["outputs"] = {"mst_edges.csv", "degrees.csv"};
    write_manifest(config, manifest);
    return 0;
}

int cmd_factors(const RunConfig& config) {
    ensure_out_dir(config);
    stocknet::LoadReport report;
    const stocknet::ReturnPanel panel = load_panel(config, &report);
    const auto k = parse_k_spec(config.k_spec);
    const auto method = config.score_method == "projection" ? stocknet::ScoreMethod::Projection
                                                            : stocknet::ScoreMethod::Regression;
    const stocknet::FactorExtraction extraction = stocknet::extract_factors(panel, k, method);

    {
        auto out = open_output(fs::path(config.out_dir) / "loadings.csv");
        stocknet::write_loadings_csv(out, panel.assets, extraction.loadings);
    }
    {
        auto out = open_output(fs::path(config.out_dir) / "scores.csv");
        stocknet::write_scores_csv(out, extraction.scores);
    }
    {
        auto out = open_output(fs::path(config.out_dir) / "eigenvalues.csv");
        out << "rank,eigenvalue\n";
        for (Eigen::Index i = 0; i < extraction.eigen.eigenvalues.size(); ++i) {
            out << (i + 1) << ','
                << stocknet::csv::format_double(extraction.eigen.eigenvalues(i)) << '\n';
        }
    }

    json manifest = base_manifest(config, "factors", report);
    manifest["k"] = config.k_spec;
    manifest["k_resolved"] = extraction.scores.factor_count();
    manifest["score_method"] = config.score_method;
    manifest["mean_abs_score_correlation"] = extraction.scores.mean_abs_correlation;
    manifest["outputs"] = {"loadings.csv", "scores.csv", "eigenvalues.csv"};
    write_manifest(config, manifest);
    return 0;
}

int cmd_fit(const RunConfig& config, bool write_panels) {
    ensure_out_dir(config);
    stocknet::LoadReport report;
    const stocknet::ReturnPanel panel = load_panel(config, &report);
    const auto k = parse_k_spec(config.k_spec);
    const auto method = config.score_method == "projection" ? stocknet::ScoreMethod::Projection
                                                            : stocknet::ScoreMethod::Regression;
    const stocknet::FactorExtraction extraction = stocknet::extract_factors(panel, k, method);
    const stocknet::FactorModelFit fit = stocknet::fit_factor_model(panel, extraction.scores);

    {
        auto out = open_output(fs::path(config.out_dir) / "fit.csv");
        stocknet::write_fit_csv(out, panel.assets, fit);
    }
    if (write_panels) {
        const stocknet::DerivedReturns derived = stocknet::derive_returns(
            panel, fit, extraction.scores, config.seed,
            stocknet::parse_noise_mode(config.noise_mode));
        std::vector<std::string> labels(static_cast<std::size_t>(panel.n_obs()));
        for (std::size_t t = 0; t < labels.size(); ++t) {
            labels[t] = "t" + std::to_string(t);
        }
        const std::pair<const char*, const Eigen::MatrixXd*> panels[] = {
            {"explained.csv", &derived.explained},
            {"random.csv", &derived.random},
            {"combined.csv", &derived.combined},
            {"residual.csv", &derived.residual},
        };
        for (const auto& [name, values] : panels) {
            auto out = open_output(fs::path(config.out_dir) / name);
            stocknet::csv::write_wide_panel(out, panel.assets, labels, *values);
        }
    }

    json manifest = base_manifest(config, "fit", report);
    manifest["k"] = config.k_spec;
    manifest["k_resolved"] = extraction.scores.factor_count();
    manifest["score_method"] = config.score_method;
    manifest["noise_mode"] = config.noise_mode;
    manifest["write_panels"] = write_panels;
    manifest["outputs"] = {"fit.csv"};
    write_manifest(config, manifest);
    return 0;
}

int cmd_sweep(const RunConfig& config) {
    ensure_out_dir(config);
    stocknet::LoadReport report;
    const stocknet::ReturnPanel panel = load_panel(config, &report);

    stocknet::SweepOptions options;
    options.k_max = parse_k_spec(config.k_spec);
    options.replicates = config.replicates;
    options.seed = config.seed;
    options.noise_mode = stocknet::parse_noise_mode(config.noise_mode);
    options.averaging = config.pooled ? stocknet::Averaging::Pooled : stocknet::Averaging::PerNode;
    options.full_threshold_axis = config.full_threshold_axis;
    options.score_method = config.score_method == "projection"
                               ? stocknet::ScoreMethod::Projection
                               : stocknet::ScoreMethod::Regression;
    options.threads = config.threads;

    const stocknet::SweepGrid grid = stocknet::run_sweep(panel, options);
    const stocknet::Marginals marginals = stocknet::marginal_means(grid);

    {
        auto out = open_output(fs::path(config.out_dir) / "grid.csv");
        stocknet::write_grid_csv(out, grid);
    }
    {
        auto out = open_output(fs::path(config.out_dir) / "marginal_by_k.csv");
        stocknet::write_marginal_by_k_csv(out, grid, marginals);
    }
    {
        auto out = open_output(fs::path(config.out_dir) / "marginal_by_threshold.csv");
        stocknet::write_marginal_by_threshold_csv(out, grid, marginals);
    }

    json manifest = base_manifest(config, "sweep", report);
    manifest["k"] = config.k_spec;
    manifest["k_resolved"] = static_cast<int>(grid.factor_counts.size());
    manifest["replicates"] = config.replicates;
    manifest["noise_mode"] = config.noise_mode;
    manifest["pooled"] = config.pooled;
    manifest["full_threshold_axis"] = config.full_threshold_axis;
    manifest["score_method"] = config.score_method;
    manifest["threads"] = config.threads;
    manifest["n_assets"] = panel.n_assets();
    manifest["n_obs"] = panel.n_obs();
    manifest["outputs"] = {"grid.csv", "marginal_by_k.csv", "marginal_by_threshold.csv"};
    write_manifest(config, manifest);
    return 0;
}

int cmd_synth(const RunConfig& config, const std::string& spec_path, bool seed_given) {
    ensure_out_dir(config);
    stocknet::MarketSpec spec;
    if (!spec_path.empty()) {
        auto in = open_input(spec_path);
        spec = stocknet::parse_market_spec(in);
    }
    if (seed_given) spec.seed = config.seed;
    spec.validate();

    const stocknet::SyntheticMarket market = stocknet::generate_market(spec);
    {
        auto out = open_output(fs::path(config.out_dir) / "returns.csv");
        std::vector<std::string> labels(static_cast<std::size_t>(market.panel.n_obs()));
        for (std::size_t t = 0; t < labels.size(); ++t) labels[t] = "t" + std::to_string(t);
        stocknet::csv::write_wide_panel(out, market.panel.assets, labels, market.panel.returns);
    }
    {
        auto out = open_output(fs::path(config.out_dir) / "ground_truth.json");
        stocknet::write_ground_truth_json(out, spec, market);
    }

    json manifest;
    manifest["version"] = stocknet::kVersion;
    manifest["command"] = "synth";
    manifest["spec_file"] = spec_path.empty() ? json(nullptr) : json(spec_path);
    manifest["seed"] = spec.seed;
    manifest["n_assets"] = spec.n_assets;
    manifest["n_obs"] = spec.n_obs;
    manifest["n_factors"] = spec.n_factors;
    manifest["outputs"] = {"returns.csv", "ground_truth.json"};
    write_manifest(config, manifest);
    return 0;
}

int cmd_survivor(const RunConfig& config, const std::string& reference_path,
                 const std::string& candidate_path) {
    ensure_out_dir(config);
    stocknet::Tree reference = [&] {
        auto in = open_input(reference_path);
        return stocknet::read_edges_csv(in);
    }();
    stocknet::Tree candidate = [&] {
        auto in = open_input(candidate_path);
        return stocknet::read_edges_csv(in);
    }();

    const auto averaging =
        config.pooled ? stocknet::Averaging::Pooled : stocknet::Averaging::PerNode;
    const stocknet::SurvivorCurve curve = stocknet::survivor_curve(reference, candidate, averaging);
    {
        auto out = open_output(fs::path(config.out_dir) / "survivor.csv");
        stocknet::write_survivor_csv(out, curve);
    }

    json manifest;
    manifest["version"] = stocknet::kVersion;
    manifest["command"] = "survivor";
    manifest["reference"] = reference_path;
    manifest["candidate"] = candidate_path;
    manifest["pooled"] = config.pooled;
    manifest["outputs"] = {"survivor.csv"};
    write_manifest(config, manifest);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Correlation-based stock networks and multi-factor model sweeps"};
    app.set_version_flag("--version", stocknet::kVersion);
    app.require_subcommand(1);

    RunConfig config;
    bool write_panels = false;
    std::string spec_path;
    std::string reference_path;
    std::string candidate_path;

    auto add_input = [&config](CLI::App* cmd) {
        cmd->add_option("input", config.input, "Input CSV (wide: date,<asset,...>)")->required();
        cmd->add_flag("--returns", config.input_is_returns,
                      "Treat input as returns, skipping the log-diff");
    };
    auto add_out = [&config](CLI::App* cmd) {
        cmd->add_option("-o,--out", config.out_dir, "Output directory")->capture_default_str();
    };

    CLI::App* network = app.add_subcommand("network", "Build the MST from a panel");
    add_input(network);
    add_out(network);
    network->add_flag("--dump-correlation", config.dump_correlation, "Also write correlation.csv");
    network->add_flag("--dump-distance", config.dump_distance, "Also write distance.csv");

    CLI::App* factors = app.add_subcommand("factors", "Extract common factors");
    add_input(factors);
    add_out(factors);
    factors->add_option("--k", config.k_spec, "Factor count or 'kaiser'")->capture_default_str();
    factors->add_option("--score-method", config.score_method, "regression|projection")
        ->check(CLI::IsMember({"regression", "projection"}))
        ->capture_default_str();

    CLI::App* fit = app.add_subcommand("fit", "Fit the multi-factor model");
    add_input(fit);
    add_out(fit);
    fit->add_option("--k", config.k_spec, "Factor count or 'kaiser'")->capture_default_str();
    fit->add_option("--score-method", config.score_method, "regression|projection")
        ->check(CLI::IsMember({"regression", "projection"}))
        ->capture_default_str();
    fit->add_option("--seed", config.seed, "Noise seed for derived panels")->capture_default_str();
    fit->add_option("--noise-mode", config.noise_mode, "residual|raw")
        ->check(CLI::IsMember({"residual", "raw"}))
        ->capture_default_str();
    fit->add_flag("--write-panels", write_panels,
                  "Also write explained/random/combined/residual panels");

    CLI::App* sweep = app.add_subcommand("sweep", "Survivor-ratio sweep over factor counts");
    add_input(sweep);
    add_out(sweep);
    sweep->add_option("--k", config.k_spec, "Max factor count or 'kaiser'")->capture_default_str();
    sweep->add_option("--replicates", config.replicates, "Noise seeds averaged per cell")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sweep->add_option("--seed", config.seed, "Master seed")->capture_default_str();
    sweep->add_option("--noise-mode", config.noise_mode, "residual|raw")
        ->check(CLI::IsMember({"residual", "raw"}))
        ->capture_default_str();
    sweep->add_flag("--pooled", config.pooled, "Pool overlaps instead of per-node averaging");
    sweep->add_flag("--full-threshold-axis", config.full_threshold_axis,
                    "Keep the duplicate threshold tail");
    sweep->add_option("--score-method", config.score_method, "regression|projection")
        ->check(CLI::IsMember({"regression", "projection"}))
        ->capture_default_str();
    sweep->add_option("--threads", config.threads, "Worker threads (0 = hardware)")
        ->capture_default_str();

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic factor market");
    add_out(synth);
    synth->add_option("--spec", spec_path, "Market spec file (key = value)");
    CLI::Option* synth_seed = synth->add_option("--seed", config.seed, "Override the spec seed");

    CLI::App* survivor = app.add_subcommand("survivor", "Compare two edge-list files");
    survivor->add_option("reference", reference_path, "Reference tree edge CSV")->required();
    survivor->add_option("candidate", candidate_path, "Candidate tree edge CSV")->required();
    add_out(survivor);
    survivor->add_flag("--pooled", config.pooled, "Pool overlaps instead of per-node averaging");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (network->parsed()) return cmd_network(config);
        if (factors->parsed()) return cmd_factors(config);
        if (fit->parsed()) return cmd_fit(config, write_panels);
        if (sweep->parsed()) return cmd_sweep(config);
        if (synth->parsed()) return cmd_synth(config, spec_path, synth_seed->count() > 0);
        if (survivor->parsed()) return cmd_survivor(config, reference_path, candidate_path);
    } catch (const stocknet::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const stocknet::NumericError& e) {
        std::cerr << "model error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitUsage;
}
