#include "stocknet/consistency.hpp"

#include <algorithm>
#include <ostream>

#include "stocknet/csv.hpp"
#include "stocknet/errors.hpp"

namespace stocknet {

namespace {

void check_same_assets(const Tree& reference, const Tree& candidate) {
    if (reference.assets != candidate.assets) {
        throw DataError("survivor ratio requires identical asset lists in both trees");
    }
}

int overlap_count(const std::vector<int>& a, const std::vector<int>& b) {
    // Both lists are sorted.
    int count = 0;
    auto it_a = a.begin();
    auto it_b = b.begin();
    while (it_a != a.end() && it_b != b.end()) {
        if (*it_a < *it_b) {
            ++it_a;
        } else if (*it_b < *it_a) {
            ++it_b;
        } else {
            ++count;
            ++it_a;
            ++it_b;
        }
    }
    return count;
}

}  // namespace

SurvivorRatio survivor_ratio(const Tree& reference, const Tree& candidate, int threshold,
                             Averaging averaging) {
    check_same_assets(reference, candidate);
    if (threshold < 1 || threshold > reference.max_degree()) {
        throw DataError("threshold " + std::to_string(threshold) +
                        " outside 1.." + std::to_string(reference.max_degree()));
    }

    double fraction_sum = 0.0;
    long long preserved = 0;
    long long total = 0;
    int eligible = 0;
    for (int j = 0; j < reference.n_nodes(); ++j) {
        const int deg = reference.degree[static_cast<std::size_t>(j)];
        if (deg < threshold) continue;
        const int kept = overlap_count(reference.adjacency[static_cast<std::size_t>(j)],
                                       candidate.adjacency[static_cast<std::size_t>(j)]);
        fraction_sum += static_cast<double>(kept) / static_cast<double>(deg);
        preserved += kept;
        total += deg;
        ++eligible;
    }

    const double ratio = averaging == Averaging::PerNode
                             ? fraction_sum / static_cast<double>(eligible)
                             : static_cast<double>(preserved) / static_cast<double>(total);
    return SurvivorRatio{ratio, eligible};
}

SurvivorCurve survivor_curve(const Tree& reference, const Tree& candidate, Averaging averaging) {
    SurvivorCurve curve;
    const int max_degree = reference.max_degree();
    curve.thresholds.reserve(static_cast<std::size_t>(max_degree));
    for (int i = 1; i <= max_degree; ++i) {
        const SurvivorRatio point = survivor_ratio(reference, candidate, i, averaging);
        curve.thresholds.push_back(i);
        curve.ratios.push_back(point.ratio);
        curve.eligible_counts.push_back(point.eligible_count);
    }
    return curve;
}

void write_survivor_csv(std::ostream& out, const SurvivorCurve& curve) {
    out << "threshold,ratio,eligible_count\n";
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
        out << curve.thresholds[i] << ',' << csv::format_double(curve.ratios[i]) << ','
            << curve.eligible_counts[i] << '\n';
    }
}

}  // namespace stocknet
