#pragma once

#include <iosfwd>
#include <vector>

#include "stocknet/mst_network.hpp"

namespace stocknet {

// How per-node neighbor overlaps combine into one ratio. PerNode averages
// the overlap fraction over eligible nodes; Pooled divides total preserved
// links by total reference links.
enum class Averaging { PerNode, Pooled };

struct SurvivorRatio {
    double ratio = 0.0;
    int eligible_count = 0;
};

// Ratios for every threshold 1..max degree of the reference tree.
struct SurvivorCurve {
    std::vector<int> thresholds;
    std::vector<double> ratios;
    std::vector<int> eligible_counts;
};

// Fraction of reference-tree neighbors preserved in the candidate tree,
// over nodes whose reference degree is >= threshold. The reference tree
// alone defines eligibility and denominators, so the measure is asymmetric.
SurvivorRatio survivor_ratio(const Tree& reference, const Tree& candidate, int threshold,
                             Averaging averaging = Averaging::PerNode);

SurvivorCurve survivor_curve(const Tree& reference, const Tree& candidate,
                             Averaging averaging = Averaging::PerNode);

void write_survivor_csv(std::ostream& out, const SurvivorCurve& curve);

}  // namespace stocknet
