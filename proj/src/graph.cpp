#include "ltlp/graph.hpp"

#include "ltlp/error.hpp"
#include "ltlp/parallel.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace ltlp {

namespace {

void check_adjacency(const Eigen::MatrixXd& w) {
    if (w.rows() != w.cols())
        throw validation_error("adjacency must be square");
    if (w.rows() == 0)
        throw validation_error("graph must have at least one vertex");
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            double x = w(i, j);
            if (!std::isfinite(x))
                throw validation_error("non-finite edge weight");
            if (x < 0.0)
                throw validation_error("negative edge weight at (" + std::to_string(i) + ", " +
                                       std::to_string(j) + ")");
            if (x != w(j, i))
                throw validation_error("adjacency is not symmetric at (" + std::to_string(i) +
                                       ", " + std::to_string(j) + ")");
        }
    }
}

}  // namespace

Graph Graph::from_edges(std::int64_t size, std::span<const Edge> edges) {
    if (size <= 0)
        throw validation_error("graph size must be positive");
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(size, size);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> seen =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(size, size, false);
    for (const Edge& e : edges) {
        if (e.row < 0 || e.row >= size || e.col < 0 || e.col >= size)
            throw validation_error("edge (" + std::to_string(e.row) + ", " +
                                   std::to_string(e.col) + ") outside [0, " +
                                   std::to_string(size) + ")");
        if (!std::isfinite(e.weight) || e.weight < 0.0)
            throw validation_error("edge weights must be finite and nonnegative");
        if (seen(e.row, e.col) && w(e.row, e.col) != e.weight)
            throw validation_error("conflicting weights for edge (" + std::to_string(e.row) +
                                   ", " + std::to_string(e.col) + ")");
        w(e.row, e.col) = e.weight;
        w(e.col, e.row) = e.weight;
        seen(e.row, e.col) = seen(e.col, e.row) = true;
    }
    return Graph(std::move(w));
}

Graph Graph::from_dense(Eigen::MatrixXd adjacency) {
    check_adjacency(adjacency);
    return Graph(std::move(adjacency));
}

std::int64_t Graph::edge_count() const {
    std::int64_t count = 0;
    for (Eigen::Index j = 0; j < adjacency_.cols(); ++j)
        for (Eigen::Index i = 0; i <= j; ++i)
            if (adjacency_(i, j) != 0.0) ++count;
    return count;
}

NormalizedGraph normalize(const Graph& g) {
    const Eigen::MatrixXd& w = g.adjacency();
    Eigen::VectorXd inv_sqrt = w.rowwise().sum();
    for (Eigen::Index i = 0; i < inv_sqrt.size(); ++i)
        inv_sqrt[i] = inv_sqrt[i] > 0.0 ? 1.0 / std::sqrt(inv_sqrt[i]) : 0.0;
    Eigen::MatrixXd s = inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal();
    // Exact symmetry, so downstream solvers see a bitwise symmetric input.
    s = 0.5 * (s + s.transpose()).eval();
    return NormalizedGraph(std::move(s));
}

EigenSystem eigendecompose(const NormalizedGraph& s, const EigenOptions& opts) {
    const Eigen::MatrixXd& m = s.matrix();
    if (m.rows() != m.cols() || m.rows() == 0)
        throw validation_error("normalized graph must be a nonempty square matrix");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success)
        throw numerical_error("symmetric eigensolver did not converge (n = " +
                              std::to_string(m.rows()) + ")");

    EigenSystem eig{solver.eigenvalues(), solver.eigenvectors()};
    for (Eigen::Index j = 0; j < eig.vectors.cols(); ++j) {
        for (Eigen::Index i = 0; i < eig.vectors.rows(); ++i) {
            double x = eig.vectors(i, j);
            if (std::abs(x) > 1e-12) {
                if (x < 0.0) eig.vectors.col(j) *= -1.0;
                break;
            }
        }
    }

    double scale = std::max(m.norm(), 1.0);
    double residual =
        (eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose() - m).norm() / scale;
    if (!(residual <= opts.reconstruction_tol)) {
        std::ostringstream msg;
        msg << "eigendecomposition reconstruction error " << residual << " exceeds "
            << opts.reconstruction_tol << " (n = " << m.rows() << ")";
        throw numerical_error(msg.str());
    }
    return eig;
}

std::vector<EigenSystem> decompose_all(std::span<const Graph> graphs, unsigned threads) {
    std::vector<EigenSystem> out(graphs.size());
    parallel_for(graphs.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            out[i] = eigendecompose(normalize(graphs[i]));
    });
    return out;
}

Graph read_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open graph file " + path.string());

    std::int64_t size = -1;
    std::vector<Edge> edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first[0] == '#') {
            if (first == "#nodes" || (first == "#" && ls >> first && first == "nodes")) {
                if (!(ls >> size) || size <= 0)
                    throw validation_error(path.string() + ": bad #nodes header");
            }
            continue;
        }
        if (size < 0)
            throw validation_error(path.string() + ": missing #nodes header before edges");
        Edge e{};
        std::istringstream es(line);
        if (!(es >> e.row >> e.col >> e.weight))
            throw validation_error(path.string() + ":" + std::to_string(line_no) +
                                   ": expected `row col weight`");
        edges.push_back(e);
    }
    if (size < 0)
        throw validation_error(path.string() + ": missing #nodes header");
    return Graph::from_edges(size, edges);
}

void write_graph(const Graph& g, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot write graph file " + path.string());
    out << "#nodes " << g.size() << '\n' << std::setprecision(17);
    const Eigen::MatrixXd& w = g.adjacency();
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i <= j; ++i)
            if (w(i, j) != 0.0) out << i << ' ' << j << ' ' << w(i, j) << '\n';
    if (!out)
        throw io_error("failed writing graph file " + path.string());
}

}  // namespace ltlp
