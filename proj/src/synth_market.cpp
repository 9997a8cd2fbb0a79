#include "stocknet/synth_market.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stocknet/csv.hpp"
#include "stocknet/errors.hpp"
#include "stocknet/rng.hpp"

namespace stocknet {

namespace {

// Substream kinds; the asset index is folded into the low bits.
constexpr std::uint64_t kFactorStream = 1ULL << 40;
constexpr std::uint64_t kBetaStream = 2ULL << 40;
constexpr std::uint64_t kNoiseStream = 3ULL << 40;

std::string asset_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "A%04d", index);
    return buf;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

void MarketSpec::validate() const {
    if (n_factors < 1) throw DataError("market spec: n_factors must be >= 1");
    if (n_assets < 2 * n_factors) {
        throw DataError("market spec: every factor needs >= 2 assets (n_assets too small)");
    }
    if (n_obs < 2) throw DataError("market spec: n_obs must be >= 2");
    if (idio_stddev <= 0.0) throw DataError("market spec: idio_stddev must be > 0");
    if (dominant_low > dominant_high || offgroup_low > offgroup_high) {
        throw DataError("market spec: beta range bounds out of order");
    }
    if (!(dominant_low > offgroup_high)) {
        throw DataError("market spec: dominant beta range must lie strictly above off-group range");
    }
    const std::vector<int> assignment = resolved_groups();
    std::vector<int> counts(static_cast<std::size_t>(n_factors), 0);
    for (const int g : assignment) {
        if (g < 0 || g >= n_factors) throw DataError("market spec: group index out of range");
        ++counts[static_cast<std::size_t>(g)];
    }
    for (int k = 0; k < n_factors; ++k) {
        if (counts[static_cast<std::size_t>(k)] < 2) {
            throw DataError("market spec: factor " + std::to_string(k) + " has fewer than 2 assets");
        }
    }
}

std::vector<int> MarketSpec::resolved_groups() const {
    if (!groups.empty()) {
        if (static_cast<int>(groups.size()) != n_assets) {
            throw DataError("market spec: groups list length differs from n_assets");
        }
        return groups;
    }
    // Contiguous blocks, as balanced as n_assets allows.
    std::vector<int> assignment(static_cast<std::size_t>(n_assets));
    for (int j = 0; j < n_assets; ++j) {
        assignment[static_cast<std::size_t>(j)] =
            std::min(n_factors - 1, j * n_factors / n_assets);
    }
    return assignment;
}

SyntheticMarket generate_market(const MarketSpec& spec) {
    spec.validate();
    const int n = spec.n_assets;
    const int t = spec.n_obs;
    const int k = spec.n_factors;
    const std::vector<int> groups = spec.resolved_groups();

    SyntheticMarket market;
    market.groups = groups;

    market.true_factors.resize(t, k);
    {
        rng::Engine engine(rng::substream(spec.seed, kFactorStream));
        for (Eigen::Index col = 0; col < k; ++col) {
            for (Eigen::Index row = 0; row < t; ++row) {
                market.true_factors(row, col) = engine.normal();
            }
        }
    }

    market.true_betas.resize(n, k);
    for (int j = 0; j < n; ++j) {
        rng::Engine engine(rng::substream(spec.seed, kBetaStream + static_cast<std::uint64_t>(j)));
        for (int col = 0; col < k; ++col) {
            const bool dominant = groups[static_cast<std::size_t>(j)] == col;
            market.true_betas(j, col) = dominant
                                            ? engine.uniform(spec.dominant_low, spec.dominant_high)
                                            : engine.uniform(spec.offgroup_low, spec.offgroup_high);
        }
    }

    Eigen::MatrixXd returns = market.true_factors * market.true_betas.transpose();
    for (int j = 0; j < n; ++j) {
        rng::Engine engine(rng::substream(spec.seed, kNoiseStream + static_cast<std::uint64_t>(j)));
        for (int row = 0; row < t; ++row) {
            returns(row, j) += spec.idio_stddev * engine.normal();
        }
    }

    std::vector<std::string> assets(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) assets[static_cast<std::size_t>(j)] = asset_name(j);
    market.panel = ReturnPanel::create(std::move(assets), std::move(returns));
    return market;
}

MarketSpec parse_market_spec(std::istream& in) {
    MarketSpec spec;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError("market spec line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string context = "market spec key '" + key + "'";

        if (key == "n_assets") {
            spec.n_assets = static_cast<int>(csv::parse_double(value, context));
        } else if (key == "n_obs") {
            spec.n_obs = static_cast<int>(csv::parse_double(value, context));
        } else if (key == "n_factors") {
            spec.n_factors = static_cast<int>(csv::parse_double(value, context));
        } else if (key == "dominant_low") {
            spec.dominant_low = csv::parse_double(value, context);
        } else if (key == "dominant_high") {
            spec.dominant_high = csv::parse_double(value, context);
        } else if (key == "offgroup_low") {
            spec.offgroup_low = csv::parse_double(value, context);
        } else if (key == "offgroup_high") {
            spec.offgroup_high = csv::parse_double(value, context);
        } else if (key == "idio_stddev") {
            spec.idio_stddev = csv::parse_double(value, context);
        } else if (key == "seed") {
            spec.seed = static_cast<std::uint64_t>(csv::parse_double(value, context));
        } else if (key == "groups") {
            spec.groups.clear();
            std::stringstream items(value);
            std::string item;
            while (std::getline(items, item, ',')) {
                spec.groups.push_back(static_cast<int>(csv::parse_double(trim(item), context)));
            }
        } else {
            throw DataError("unknown market spec key '" + key + "'");
        }
    }
    spec.validate();
    return spec;
}

void write_ground_truth_json(std::ostream& out, const MarketSpec& spec,
                             const SyntheticMarket& market) {
    nlohmann::json doc;
    doc["n_assets"] = spec.n_assets;
    doc["n_obs"] = spec.n_obs;
    doc["n_factors"] = spec.n_factors;
    doc["dominant_low"] = spec.dominant_low;
    doc["dominant_high"] = spec.dominant_high;
    doc["offgroup_low"] = spec.offgroup_low;
    doc["offgroup_high"] = spec.offgroup_high;
    doc["idio_stddev"] = spec.idio_stddev;
    doc["seed"] = spec.seed;
    doc["assets"] = market.panel.assets;
    doc["groups"] = market.groups;
    std::vector<std::vector<double>> betas;
    for (Eigen::Index j = 0; j < market.true_betas.rows(); ++j) {
        betas.emplace_back(market.true_betas.row(j).begin(), market.true_betas.row(j).end());
    }
    doc["true_betas"] = betas;
    out << doc.dump(2) << '\n';
}

}  // namespace stocknet
