#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ltlp {

struct Edge {
    std::int64_t row;
    std::int64_t col;
    double weight;
};

/// Undirected weighted graph. Stored as a dense symmetric adjacency because
/// every graph is fully eigendecomposed downstream anyway.
class Graph {
public:
    Graph() = default;

    /// Builds from an edge list; each (a, b, w) also sets (b, a, w).
    /// Conflicting weights for the same unordered pair are rejected.
    static Graph from_edges(std::int64_t size, std::span<const Edge> edges);

    /// Takes a dense adjacency as-is. Must be square, symmetric and nonnegative.
    static Graph from_dense(Eigen::MatrixXd adjacency);

    std::int64_t size() const { return adjacency_.rows(); }
    const Eigen::MatrixXd& adjacency() const { return adjacency_; }
    std::int64_t edge_count() const;  // unordered pairs with nonzero weight, loops included

private:
    explicit Graph(Eigen::MatrixXd adjacency) : adjacency_(std::move(adjacency)) {}
    Eigen::MatrixXd adjacency_;
};

/// Symmetrically normalized adjacency D^{-1/2} W D^{-1/2}.
class NormalizedGraph {
public:
    NormalizedGraph() = default;
    explicit NormalizedGraph(Eigen::MatrixXd s) : matrix_(std::move(s)) {}

    std::int64_t size() const { return matrix_.rows(); }
    const Eigen::MatrixXd& matrix() const { return matrix_; }

private:
    Eigen::MatrixXd matrix_;
};

/// Eigenvalues in ascending order; column j of `vectors` pairs with values[j].
struct EigenSystem {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;

    std::int64_t size() const { return values.size(); }
};

/// Zero-degree vertices get a zero entry in D^{-1/2}, leaving their rows and
/// columns of S zero.
NormalizedGraph normalize(const Graph& g);

struct EigenOptions {
    double reconstruction_tol = 1e-8;  // relative Frobenius
};

/// Full symmetric eigendecomposition. Each eigenvector column is sign-fixed so
/// its first entry with |x| > 1e-12 is positive.
EigenSystem eigendecompose(const NormalizedGraph& s, const EigenOptions& opts = {});

/// normalize + eigendecompose for every graph, one task per graph.
std::vector<EigenSystem> decompose_all(std::span<const Graph> graphs, unsigned threads = 0);

/// Edge list text: a `#nodes I` header, then `row col weight` lines (0-based).
/// Blank lines and other `#` lines are ignored.
Graph read_graph(const std::filesystem::path& path);
void write_graph(const Graph& g, const std::filesystem::path& path);

}  // namespace ltlp
