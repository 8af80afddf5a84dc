#pragma once

#include "ltlp/spectrum.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ltlp {

// Mode l of every tensor corresponds to graph l (0-based), and contractions
// always pair graph l's vectors with mode l.

/// Coordinate-format n-way tensor, entries sorted lexicographically by index.
class SparseTensor {
public:
    SparseTensor() = default;

    /// `indices` is row-major nnz x n. Entries are sorted on construction;
    /// duplicate tuples, out-of-range indices and non-finite values are rejected.
    SparseTensor(std::vector<std::int64_t> dims, std::vector<std::int32_t> indices,
                 std::vector<double> values);

    std::size_t order() const { return dims_.size(); }
    std::size_t nnz() const { return values_.size(); }
    const std::vector<std::int64_t>& dims() const { return dims_; }
    std::span<const std::int32_t> index(std::size_t e) const {
        return {indices_.data() + e * order(), order()};
    }
    double value(std::size_t e) const { return values_[e]; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<std::int32_t>& indices() const { return indices_; }

private:
    std::vector<std::int64_t> dims_;
    std::vector<std::int32_t> indices_;
    std::vector<double> values_;
};

/// Sum over r of the outer product of column r of every factor.
class CPTensor {
public:
    CPTensor() = default;
    explicit CPTensor(std::vector<Eigen::MatrixXd> factors);

    std::size_t order() const { return factors_.size(); }
    Eigen::Index rank() const { return factors_.empty() ? 0 : factors_.front().cols(); }
    std::vector<std::int64_t> dims() const;
    const std::vector<Eigen::MatrixXd>& factors() const { return factors_; }

private:
    std::vector<Eigen::MatrixXd> factors_;
};

/// Full contraction: sum over nonzeros of value * prod_l vectors[l][i_l].
double ttv_all(const SparseTensor& t, std::span<const Eigen::VectorXd> vectors);

/// v_j = Y contracted with column j of every factor, computed through the
/// mode-1 unfolding times the Khatri-Rao product of factors 2..n. Parallel
/// over blocks of columns.
Eigen::VectorXd matricized_compress(const SparseTensor& t, const SelectedSpectrum& spec,
                                    unsigned threads = 0);

double cp_entry(const CPTensor& t, std::span<const std::int32_t> idx);

/// Column-wise Kronecker product; column j is a_j (x) b_j with a's index slowest.
Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// (A (.) B)^T (C (.) D) evaluated as (A^T C) * (B^T D) without forming either product.
Eigen::MatrixXd khatri_rao_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                const Eigen::MatrixXd& c, const Eigen::MatrixXd& d);

/// Sparse tensor text: `dims I_1 .. I_n`, then `i_1 .. i_n value` lines (0-based).
SparseTensor read_sparse_tensor(const std::filesystem::path& path);
void write_sparse_tensor(const SparseTensor& t, const std::filesystem::path& path);

/// CP tensor text: `rank r`, `order n`, then per factor a `factor I_i` line
/// followed by I_i rows of r values.
CPTensor read_cp_tensor(const std::filesystem::path& path);
void write_cp_tensor(const CPTensor& t, const std::filesystem::path& path);

}  // namespace ltlp
