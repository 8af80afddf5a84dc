#include "ltlp/pairwise.hpp"

#include "ltlp/error.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

namespace ltlp {

namespace {

constexpr double kEps = 1e-12;

double objective(const Eigen::MatrixXd& m, double m_norm_sq, const Eigen::MatrixXd& f) {
    // ||M - F F^T||^2 = ||M||^2 - 2 tr(F^T M F) + ||F^T F||^2
    Eigen::MatrixXd gram = f.transpose() * f;
    double cross = (f.transpose() * m * f).trace();
    return std::max(0.0, m_norm_sq - 2.0 * cross + gram.squaredNorm());
}

}  // namespace

void PairwiseSet::add(std::size_t i, std::size_t j, Eigen::MatrixXd r) {
    if (i == j)
        throw validation_error("pairwise block must join two different graphs");
    if (i < j)
        blocks[{i, j}] = std::move(r);
    else
        blocks[{j, i}] = r.transpose();
}

Eigen::MatrixXd stack_pairwise(const PairwiseSet& p, std::span<const std::int64_t> sizes) {
    std::vector<std::int64_t> offset(sizes.size() + 1, 0);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] <= 0)
            throw validation_error("graph sizes must be positive");
        offset[i + 1] = offset[i] + sizes[i];
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(offset.back(), offset.back());
    for (const auto& [key, r] : p.blocks) {
        auto [i, j] = key;
        if (j >= sizes.size())
            throw validation_error("pairwise block references graph " + std::to_string(j) +
                                   " but only " + std::to_string(sizes.size()) + " graphs exist");
        if (r.rows() != sizes[i] || r.cols() != sizes[j])
            throw validation_error("pairwise block (" + std::to_string(i) + ", " +
                                   std::to_string(j) + ") has shape " + std::to_string(r.rows()) +
                                   "x" + std::to_string(r.cols()) + ", expected " +
                                   std::to_string(sizes[i]) + "x" + std::to_string(sizes[j]));
        if (!r.allFinite() || (r.array() < 0.0).any())
            throw validation_error("pairwise block (" + std::to_string(i) + ", " +
                                   std::to_string(j) + ") has negative or non-finite entries");
        out.block(offset[i], offset[j], r.rows(), r.cols()) = r;
        out.block(offset[j], offset[i], r.cols(), r.rows()) = r.transpose();
    }
    return out;
}

SymNMFResult symnmf(const Eigen::MatrixXd& m, const SymNMFOptions& opts) {
    const Eigen::Index n = m.rows();
    if (m.cols() != n || n == 0)
        throw validation_error("symnmf: matrix must be square and nonempty");
    if (opts.rank < 1 || opts.rank > n)
        throw validation_error("symnmf: rank must lie in [1, " + std::to_string(n) + "]");
    if (!m.allFinite() || (m.array() < 0.0).any())
        throw validation_error("symnmf: matrix must be finite and nonnegative");
    if ((m - m.transpose()).norm() > 1e-12 * std::max(1.0, m.norm()))
        throw validation_error("symnmf: matrix is not symmetric");

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double scale = std::sqrt(m.mean() / static_cast<double>(opts.rank));
    SymNMFResult res;
    res.factor.resize(n, opts.rank);
    for (Eigen::Index r = 0; r < opts.rank; ++r)
        for (Eigen::Index i = 0; i < n; ++i) {
            double u = 0.0;
            while (u == 0.0) u = unit(rng);
            res.factor(i, r) = u * scale;
        }

    Eigen::MatrixXd& f = res.factor;
    const double m_norm_sq = m.squaredNorm();
    double obj = objective(m, m_norm_sq, f);
    res.objective.push_back(obj);

    for (int it = 0; it < opts.max_iters; ++it) {
        if (obj <= 1e-30 * std::max(m_norm_sq, 1.0)) {
            res.converged = true;
            break;
        }
        Eigen::MatrixXd numer = m * f;
        Eigen::MatrixXd denom = f * (f.transpose() * f);
        Eigen::ArrayXXd ratio = numer.array() / (denom.array() + kEps);

        double step = 1.0;
        Eigen::MatrixXd next;
        double next_obj = obj;
        bool accepted = false;
        for (int halvings = 0; halvings < 40; ++halvings, step *= 0.5) {
            next = (f.array() * (1.0 - step + step * ratio)).matrix();
            next_obj = objective(m, m_norm_sq, next);
            if (next_obj <= obj) {
                accepted = true;
                break;
            }
        }
        res.iterations = it + 1;
        if (!accepted) {
            // No damped step decreases the objective: F is a fixed point.
            res.objective.push_back(obj);
            res.converged = true;
            break;
        }
        double rel = (obj - next_obj) / std::max(obj, kEps);
        f = std::move(next);
        obj = next_obj;
        res.objective.push_back(obj);
        if (rel < opts.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

CPTensor split_factors(const Eigen::MatrixXd& f, std::span<const std::int64_t> sizes) {
    std::int64_t total = std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0});
    if (sizes.empty() || total != f.rows())
        throw validation_error("split_factors: sizes sum to " + std::to_string(total) +
                               " but factor has " + std::to_string(f.rows()) + " rows");
    std::vector<Eigen::MatrixXd> factors;
    Eigen::Index row = 0;
    for (auto s : sizes) {
        if (s <= 0)
            throw validation_error("split_factors: sizes must be positive");
        factors.emplace_back(f.middleRows(row, s));
        row += s;
    }
    return CPTensor(std::move(factors));
}

Eigen::MatrixXd stack_factors(const CPTensor& t) {
    Eigen::Index rows = 0;
    for (const auto& f : t.factors()) rows += f.rows();
    Eigen::MatrixXd out(rows, t.rank());
    Eigen::Index row = 0;
    for (const auto& f : t.factors()) {
        out.middleRows(row, f.rows()) = f;
        row += f.rows();
    }
    return out;
}

PairwiseBlock read_pairwise(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open pairwise file " + path.string());
    std::string key, layout;
    PairwiseBlock b;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> key >> b.i >> b.j >> rows >> cols >> layout) || key != "pair" || rows <= 0 ||
        cols <= 0 || (layout != "dense" && layout != "coo"))
        throw validation_error(path.string() + ": expected `pair i j rows cols dense|coo` header");
    b.matrix = Eigen::MatrixXd::Zero(rows, cols);
    if (layout == "dense") {
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c)
                if (!(in >> b.matrix(r, c)))
                    throw validation_error(path.string() + ": truncated dense block");
    } else {
        Eigen::Index r, c;
        double v;
        while (in >> r >> c >> v) {
            if (r < 0 || r >= rows || c < 0 || c >= cols)
                throw validation_error(path.string() + ": coo entry out of range");
            b.matrix(r, c) = v;
        }
        if (!in.eof())
            throw validation_error(path.string() + ": malformed coo entry");
    }
    return b;
}

void write_pairwise(const PairwiseBlock& block, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot write pairwise file " + path.string());
    out << std::setprecision(17) << "pair " << block.i << ' ' << block.j << ' '
        << block.matrix.rows() << ' ' << block.matrix.cols() << " dense\n";
    for (Eigen::Index r = 0; r < block.matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < block.matrix.cols(); ++c)
            out << (c ? " " : "") << block.matrix(r, c);
        out << '\n';
    }
    if (!out)
        throw io_error("failed writing pairwise file " + path.string());
}

CPTensor cp_from_pairwise(std::span<const std::filesystem::path> files,
                          std::span<const std::int64_t> sizes, const SymNMFOptions& opts) {
    PairwiseSet set;
    for (const auto& file : files) {
        PairwiseBlock b = read_pairwise(file);
        set.add(b.i, b.j, std::move(b.matrix));
    }
    Eigen::MatrixXd stacked = stack_pairwise(set, sizes);
    return split_factors(symnmf(stacked, opts).factor, sizes);
}

}  // namespace ltlp
