#pragma once

#include "ltlp/tensor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace ltlp {

/// Nonnegative cross-graph similarity blocks keyed by graph pair (i, j), i < j.
/// R_ij is I_i x I_j. Pairs that are absent count as zero blocks.
struct PairwiseSet {
    std::map<std::pair<std::size_t, std::size_t>, Eigen::MatrixXd> blocks;

    /// Stores the block under (min, max), transposing when given as (j, i).
    void add(std::size_t i, std::size_t j, Eigen::MatrixXd r);
};

/// Symmetric (sum I_i) x (sum I_i) matrix with R_ij off the diagonal and zero
/// diagonal blocks.
Eigen::MatrixXd stack_pairwise(const PairwiseSet& p, std::span<const std::int64_t> sizes);

struct SymNMFOptions {
    Eigen::Index rank = 1;
    int max_iters = 500;
    double tol = 1e-6;  // relative change of the objective between iterations
    std::uint64_t seed = 0;
};

struct SymNMFResult {
    Eigen::MatrixXd factor;          // F >= 0
    std::vector<double> objective;   // ||M - F F^T||_F^2 before the first and after every iteration
    int iterations = 0;
    bool converged = false;
};

/// Symmetric NMF M ~ F F^T by multiplicative updates F <- F * (M F) / (F F^T F).
/// A step that would raise the objective is damped toward the current F
/// (F <- F * (1 - b + b (M F) / (F F^T F)), halving b), so the objective never increases.
SymNMFResult symnmf(const Eigen::MatrixXd& m, const SymNMFOptions& opts);

/// Row blocks of F in graph order become the CP factors.
CPTensor split_factors(const Eigen::MatrixXd& f, std::span<const std::int64_t> sizes);

/// Inverse of split_factors.
Eigen::MatrixXd stack_factors(const CPTensor& t);

/// Pairwise file: header `pair i j rows cols dense|coo`, then either `rows`
/// lines of `cols` values or `row col value` triples.
struct PairwiseBlock {
    std::size_t i = 0;
    std::size_t j = 0;
    Eigen::MatrixXd matrix;
};
PairwiseBlock read_pairwise(const std::filesystem::path& path);
void write_pairwise(const PairwiseBlock& block, const std::filesystem::path& path);

/// Pairwise files -> stacked matrix -> symNMF -> CP initial tensor.
CPTensor cp_from_pairwise(std::span<const std::filesystem::path> files,
                          std::span<const std::int64_t> sizes, const SymNMFOptions& opts);

}  // namespace ltlp
