#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "stocknet/correlation.hpp"

namespace stocknet {

// Undirected edge with endpoints ordered a < b.
struct TreeEdge {
    int a = 0;
    int b = 0;
    double weight = 0.0;
};

// Spanning tree over N assets: N-1 edges, sorted adjacency lists, degrees.
struct Tree {
    std::vector<std::string> assets;
    std::vector<TreeEdge> edges;             // sorted by (weight, a, b)
    std::vector<std::vector<int>> adjacency;  // per-node sorted neighbor lists
    std::vector<int> degree;
    double total_weight = 0.0;

    int n_nodes() const { return static_cast<int>(assets.size()); }
    int max_degree() const;

    // Validates tree structure (N-1 edges, connected, acyclic) and builds
    // the adjacency/degree views. Endpoints may arrive in either order.
    static Tree from_edges(std::vector<std::string> assets, std::vector<TreeEdge> edges);
};

// Deterministic Kruskal: candidate edges sorted by (weight, smaller index,
// larger index), cycles rejected through union-find.
Tree build_mst(const DistanceMatrix& dist);
Tree build_mst(std::vector<std::string> assets, const Eigen::MatrixXd& weights);

// For each threshold i in 1..max degree, the nodes with degree >= i.
std::map<int, std::vector<int>> degree_threshold_sets(const Tree& tree);

void write_edges_csv(std::ostream& out, const Tree& tree);
void write_degrees_csv(std::ostream& out, const Tree& tree);

// Reads an edge-list CSV (`asset_a,asset_b,distance`); node order is the
// sorted set of asset names seen.
Tree read_edges_csv(std::istream& in);

}  // namespace stocknet
