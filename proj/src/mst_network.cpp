#include "stocknet/mst_network.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <set>

#include "stocknet/csv.hpp"
#include "stocknet/errors.hpp"

namespace stocknet {

namespace {

// Union-find with path compression and union by rank.
class UnionFind {
public:
    explicit UnionFind(int n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }

    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
        return true;
    }

private:
    std::vector<int> parent_;
    std::vector<int> rank_;
};

bool edge_order(const TreeEdge& x, const TreeEdge& y) {
    if (x.weight != y.weight) return x.weight < y.weight;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
}

}  // namespace

int Tree::max_degree() const {
    return degree.empty() ? 0 : *std::max_element(degree.begin(), degree.end());
}

Tree Tree::from_edges(std::vector<std::string> assets, std::vector<TreeEdge> edges) {
    const int n = static_cast<int>(assets.size());
    if (n < 2) throw DataError("tree needs at least 2 nodes");
    if (static_cast<int>(edges.size()) != n - 1) {
        throw DataError("tree over " + std::to_string(n) + " nodes needs " + std::to_string(n - 1) +
                        " edges, got " + std::to_string(edges.size()));
    }

    UnionFind components(n);
    for (auto& edge : edges) {
        if (edge.a > edge.b) std::swap(edge.a, edge.b);
        if (edge.a < 0 || edge.b >= n) throw DataError("edge endpoint out of range");
        if (edge.a == edge.b) throw DataError("self-loop on node " + std::to_string(edge.a));
        if (!components.unite(edge.a, edge.b)) {
            throw DataError("edge list contains a cycle through node " + std::to_string(edge.a));
        }
    }
    // n-1 successful unions on n nodes imply a single connected component.

    std::sort(edges.begin(), edges.end(), edge_order);

    Tree tree;
    tree.assets = std::move(assets);
    tree.edges = std::move(edges);
    tree.adjacency.assign(static_cast<std::size_t>(n), {});
    tree.degree.assign(static_cast<std::size_t>(n), 0);
    for (const auto& edge : tree.edges) {
        tree.adjacency[static_cast<std::size_t>(edge.a)].push_back(edge.b);
        tree.adjacency[static_cast<std::size_t>(edge.b)].push_back(edge.a);
        ++tree.degree[static_cast<std::size_t>(edge.a)];
        ++tree.degree[static_cast<std::size_t>(edge.b)];
        tree.total_weight += edge.weight;
    }
    for (auto& neighbors : tree.adjacency) std::sort(neighbors.begin(), neighbors.end());
    return tree;
}

Tree build_mst(std::vector<std::string> assets, const Eigen::MatrixXd& weights) {
    const int n = static_cast<int>(assets.size());
    if (n < 2) throw DataError("MST needs at least 2 nodes");
    if (weights.rows() != n || weights.cols() != n) {
        throw DataError("weight matrix shape does not match asset list");
    }

    std::vector<TreeEdge> candidates;
    candidates.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            candidates.push_back(TreeEdge{i, j, weights(i, j)});
        }
    }
    std::sort(candidates.begin(), candidates.end(), edge_order);

    UnionFind components(n);
    std::vector<TreeEdge> accepted;
    accepted.reserve(static_cast<std::size_t>(n - 1));
    for (const auto& edge : candidates) {
        if (components.unite(edge.a, edge.b)) {
            accepted.push_back(edge);
            if (static_cast<int>(accepted.size()) == n - 1) break;
        }
    }
    return Tree::from_edges(std::move(assets), std::move(accepted));
}

Tree build_mst(const DistanceMatrix& dist) { return build_mst(dist.assets, dist.dist); }

std::map<int, std::vector<int>> degree_threshold_sets(const Tree& tree) {
    std::map<int, std::vector<int>> sets;
    for (int i = 1; i <= tree.max_degree(); ++i) {
        std::vector<int> nodes;
        for (int j = 0; j < tree.n_nodes(); ++j) {
            if (tree.degree[static_cast<std::size_t>(j)] >= i) nodes.push_back(j);
        }
        sets.emplace(i, std::move(nodes));
    }
    return sets;
}

void write_edges_csv(std::ostream& out, const Tree& tree) {
    out << "asset_a,asset_b,distance\n";
    for (const auto& edge : tree.edges) {
        out << tree.assets[static_cast<std::size_t>(edge.a)] << ','
            << tree.assets[static_cast<std::size_t>(edge.b)] << ','
            << csv::format_double(edge.weight) << '\n';
    }
}

void write_degrees_csv(std::ostream& out, const Tree& tree) {
    out << "asset,degree\n";
    for (int j = 0; j < tree.n_nodes(); ++j) {
        out << tree.assets[static_cast<std::size_t>(j)] << ','
            << tree.degree[static_cast<std::size_t>(j)] << '\n';
    }
}

Tree read_edges_csv(std::istream& in) {
    const csv::Table table = csv::read_table(in);
    if (table.header != std::vector<std::string>{"asset_a", "asset_b", "distance"}) {
        throw DataError("malformed edge-list header: expected 'asset_a,asset_b,distance'");
    }
    std::set<std::string> names;
    for (const auto& row : table.rows) {
        names.insert(row[0]);
        names.insert(row[1]);
    }
    std::vector<std::string> assets(names.begin(), names.end());
    auto index_of = [&assets](const std::string& name) {
        return static_cast<int>(std::lower_bound(assets.begin(), assets.end(), name) - assets.begin());
    };
    std::vector<TreeEdge> edges;
    edges.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        edges.push_back(TreeEdge{index_of(row[0]), index_of(row[1]),
                                 csv::parse_double(row[2], "edge " + row[0] + "-" + row[1])});
    }
    return Tree::from_edges(std::move(assets), std::move(edges));
}

}  // namespace stocknet
