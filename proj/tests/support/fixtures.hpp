#pragma once

// Test-side helpers. The dense reference computations here are written
// independently of the library's own oracle module.

#include "ltlp/graph.hpp"
#include "ltlp/model.hpp"
#include "ltlp/spectrum.hpp"
#include "ltlp/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fx {

using Rng = std::mt19937_64;
using Tuple = std::vector<std::int32_t>;

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Random weighted graph; a spanning path keeps every vertex connected.
inline ltlp::Graph random_graph(std::int64_t n, Rng& rng, double density = 0.6) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = i + 1; j < n; ++j)
            if (j == i + 1 || uniform(rng) < density) w(i, j) = w(j, i) = uniform(rng, 0.1, 1.0);
    return ltlp::Graph::from_dense(std::move(w));
}

inline std::vector<ltlp::Graph> random_graphs(const std::vector<std::int64_t>& sizes, Rng& rng,
                                              double density = 0.6) {
    std::vector<ltlp::Graph> out;
    for (auto s : sizes) out.push_back(random_graph(s, rng, density));
    return out;
}

inline Eigen::MatrixXd naive_kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index p = 0; p < b.rows(); ++p)
                for (Eigen::Index q = 0; q < b.cols(); ++q)
                    k(i * b.rows() + p, j * b.cols() + q) = a(i, j) * b(p, q);
    return k;
}

inline Eigen::MatrixXd kron_chain(const std::vector<Eigen::MatrixXd>& mats) {
    Eigen::MatrixXd k = mats.front();
    for (std::size_t i = 1; i < mats.size(); ++i) k = naive_kron(k, mats[i]);
    return k;
}

inline Eigen::MatrixXd normalized(const Eigen::MatrixXd& w) {
    Eigen::VectorXd d = w.rowwise().sum();
    Eigen::MatrixXd s = w;
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            double di = d[i] > 0 ? d[i] : 0.0, dj = d[j] > 0 ? d[j] : 0.0;
            s(i, j) = (di > 0 && dj > 0) ? w(i, j) / std::sqrt(di * dj) : 0.0;
        }
    return s;
}

inline std::vector<Eigen::MatrixXd> normalized_all(const std::vector<ltlp::Graph>& gs) {
    std::vector<Eigen::MatrixXd> out;
    for (const auto& g : gs) out.push_back(normalized(g.adjacency()));
    return out;
}

inline std::vector<std::int64_t> sizes_of(const std::vector<ltlp::Graph>& gs) {
    std::vector<std::int64_t> out;
    for (const auto& g : gs) out.push_back(g.size());
    return out;
}

inline std::int64_t product(const std::vector<std::int64_t>& dims) {
    std::int64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

// Row-major linear index: mode 0 slowest.
inline std::int64_t linear(const std::vector<std::int64_t>& dims, std::span<const std::int32_t> idx) {
    std::int64_t lin = 0;
    for (std::size_t l = 0; l < dims.size(); ++l) lin = lin * dims[l] + idx[l];
    return lin;
}

inline std::vector<Tuple> all_tuples(const std::vector<std::int64_t>& dims) {
    std::vector<Tuple> out;
    Tuple t(dims.size(), 0);
    for (std::int64_t c = 0; c < product(dims); ++c) {
        out.push_back(t);
        for (std::size_t l = dims.size(); l-- > 0;) {
            if (++t[l] < dims[l]) break;
            t[l] = 0;
        }
    }
    return out;
}

inline Eigen::VectorXd dense_vec(const ltlp::InitialTensor& y0) {
    auto dims = ltlp::tensor_dims(y0);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(product(dims));
    if (const auto* sp = std::get_if<ltlp::SparseTensor>(&y0)) {
        for (std::size_t e = 0; e < sp->nnz(); ++e) v[linear(dims, sp->index(e))] = sp->value(e);
    } else {
        const auto& cp = std::get<ltlp::CPTensor>(y0);
        for (const auto& t : all_tuples(dims)) {
            double s = 0;
            for (Eigen::Index r = 0; r < cp.rank(); ++r) {
                double p = 1;
                for (std::size_t l = 0; l < dims.size(); ++l) p *= cp.factors()[l](t[l], r);
                s += p;
            }
            v[linear(dims, t)] = s;
        }
    }
    return v;
}

inline ltlp::SparseTensor random_sparse(const std::vector<std::int64_t>& dims, std::size_t nnz, Rng& rng,
                                        bool nonnegative = false) {
    std::set<Tuple> seen;
    std::vector<std::int32_t> idx;
    std::vector<double> vals;
    nnz = std::min<std::size_t>(nnz, static_cast<std::size_t>(product(dims)));
    while (seen.size() < nnz) {
        Tuple t;
        for (auto d : dims) t.push_back(std::uniform_int_distribution<std::int32_t>(0, static_cast<std::int32_t>(d - 1))(rng));
        if (!seen.insert(t).second) continue;
        idx.insert(idx.end(), t.begin(), t.end());
        vals.push_back(nonnegative ? uniform(rng, 0.1, 1.0) : uniform(rng, -1.0, 1.0));
    }
    return ltlp::SparseTensor(dims, std::move(idx), std::move(vals));
}

inline ltlp::CPTensor random_cp(const std::vector<std::int64_t>& dims, Eigen::Index rank, Rng& rng) {
    std::vector<Eigen::MatrixXd> f;
    for (auto d : dims) {
        Eigen::MatrixXd m(d, rank);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -1.0, 1.0);
        f.push_back(m);
    }
    return ltlp::CPTensor(std::move(f));
}

inline ltlp::SparseTensor to_sparse(const ltlp::InitialTensor& y0) {
    auto dims = ltlp::tensor_dims(y0);
    Eigen::VectorXd v = dense_vec(y0);
    std::vector<std::int32_t> idx;
    std::vector<double> vals;
    for (const auto& t : all_tuples(dims)) {
        double x = v[linear(dims, t)];
        if (x == 0.0) continue;
        idx.insert(idx.end(), t.begin(), t.end());
        vals.push_back(x);
    }
    return ltlp::SparseTensor(dims, std::move(idx), std::move(vals));
}

// (1 - alpha) (I - alpha S_1 (x) ... (x) S_n)^{-1} vec(Y0) by a dense solve.
inline Eigen::VectorXd closed_form(const std::vector<ltlp::Graph>& gs, const ltlp::InitialTensor& y0,
                                   double alpha) {
    Eigen::MatrixXd s = kron_chain(normalized_all(gs));
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(s.rows(), s.cols()) - alpha * s;
    return (1.0 - alpha) * a.partialPivLu().solve(dense_vec(y0));
}

inline Eigen::MatrixXd transform_a(const std::vector<ltlp::Graph>& gs, double alpha) {
    Eigen::MatrixXd s = kron_chain(normalized_all(gs));
    return (Eigen::MatrixXd::Identity(s.rows(), s.cols()) - alpha * s).inverse();
}

// Product eigenvector matrix for the given tuples (columns in tuple order).
inline Eigen::MatrixXd product_vectors(const std::vector<ltlp::EigenSystem>& eigs,
                                       const std::vector<Tuple>& tuples) {
    std::vector<std::int64_t> dims;
    for (const auto& e : eigs) dims.push_back(e.size());
    Eigen::MatrixXd q(product(dims), static_cast<Eigen::Index>(tuples.size()));
    for (std::size_t j = 0; j < tuples.size(); ++j) {
        Eigen::VectorXd col = eigs[0].vectors.col(tuples[j][0]);
        for (std::size_t l = 1; l < eigs.size(); ++l) {
            Eigen::VectorXd next(col.size() * eigs[l].size());
            for (Eigen::Index a = 0; a < col.size(); ++a)
                next.segment(a * eigs[l].size(), eigs[l].size()) = col[a] * eigs[l].vectors.col(tuples[j][l]);
            col = next;
        }
        q.col(static_cast<Eigen::Index>(j)) = col;
    }
    return q;
}

inline double product_value(const std::vector<ltlp::EigenSystem>& eigs, const Tuple& t) {
    double p = 1;
    for (std::size_t l = 0; l < eigs.size(); ++l) p *= eigs[l].values[t[l]];
    return p;
}

// A_hat = (I - alpha S_k)^{-1} for S_k built from the given product eigenpairs.
inline Eigen::MatrixXd transform_hat(const std::vector<ltlp::EigenSystem>& eigs, const std::vector<Tuple>& tuples,
                                     double alpha) {
    Eigen::MatrixXd q = product_vectors(eigs, tuples);
    Eigen::VectorXd lam(static_cast<Eigen::Index>(tuples.size()));
    for (std::size_t j = 0; j < tuples.size(); ++j) lam[static_cast<Eigen::Index>(j)] = product_value(eigs, tuples[j]);
    Eigen::MatrixXd sk = q * lam.asDiagonal() * q.transpose();
    return (Eigen::MatrixXd::Identity(q.rows(), q.rows()) - alpha * sk).inverse();
}

inline double spectral_norm(const Eigen::MatrixXd& m) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

inline std::vector<ltlp::EigenSystem> decompose(const std::vector<ltlp::Graph>& gs) {
    return ltlp::decompose_all(std::span<const ltlp::Graph>(gs), 1);
}

// Temporary directory removed on scope exit.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::uint64_t counter = 0;
        Rng rng(std::random_device{}());
        path = std::filesystem::temp_directory_path() /
               ("ltlp_test_" + std::to_string(rng() % 1000000000) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::shared_ptr<const ltlp::InitialTensor> share(ltlp::InitialTensor t) {
    return std::make_shared<const ltlp::InitialTensor>(std::move(t));
}

}  // namespace fx
