#pragma once

#include "ltlp/graph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ltlp {

using IndexTuple = std::vector<std::int32_t>;

/// A product eigenvalue of the tensor product graph together with the
/// per-graph eigenvector columns that produce it.
struct ScoredCandidate {
    double value = 0.0;
    IndexTuple index;
};

/// The k selected product eigenpairs. Column j of factors[i] is column
/// index[j][i] of graph i's eigenvector matrix.
struct SelectedSpectrum {
    double alpha = 0.0;
    std::vector<double> lambdas;
    std::vector<IndexTuple> index;
    std::vector<Eigen::MatrixXd> factors;

    std::size_t rank() const { return lambdas.size(); }
    std::size_t order() const { return factors.size(); }
};

/// alpha|lambda| / (1 - alpha lambda): the singular value of the transform
/// perturbation contributed by leaving lambda out.
double selection_score(double lambda, double alpha);

/// The k algebraically largest union the k algebraically smallest entries,
/// ordered by value descending, then index tuple ascending.
std::vector<ScoredCandidate> top_bot_2k(std::span<const ScoredCandidate> values, std::size_t k);

struct SelectOptions {
    // Candidates kept from each end between recursion steps, as a multiple of k.
    // 1 is the minimum that provably suffices; larger values only cost time.
    std::size_t window_factor = 1;
};

/// Picks the k product eigenpairs with the largest selection_score, found by
/// recursing over graphs in input order with top_bot_2k pruning. Equal scores
/// go to the lexicographically smaller index tuple. k above the product size
/// is clamped with a warning.
SelectedSpectrum select_eigenpairs(std::span<const EigenSystem> eigs, double alpha, std::size_t k,
                                   const SelectOptions& opts = {});

/// Builds a SelectedSpectrum from explicit index tuples (values recomputed
/// from the per-graph spectra; order is preserved).
SelectedSpectrum spectrum_from_tuples(std::span<const EigenSystem> eigs, double alpha,
                                      std::vector<IndexTuple> tuples);

/// m_j = alpha lambda_j / (1 - alpha lambda_j).
std::vector<double> filter_weights(const SelectedSpectrum& spec);

struct PerturbationNorms {
    double spectral = 0.0;
    double frobenius = 0.0;
};

/// Norms of (I - alpha S_k)^{-1} - (I - alpha S)^{-1} from the unselected part of
/// the full product spectrum. Enumerates all prod(I_i) products, so it refuses
/// instances above `cap`.
PerturbationNorms perturbation_norms(std::span<const EigenSystem> eigs,
                                     const SelectedSpectrum& spec, double alpha,
                                     std::uint64_t cap = 1'000'000);

/// Product of per-graph sizes, saturating at UINT64_MAX.
std::uint64_t product_size(std::span<const EigenSystem> eigs);

/// Sidecar text: `alpha <a>`, `rank <k>`, `order <n>`, then k lines `lambda idx_1 .. idx_n`.
void write_spectrum(const SelectedSpectrum& spec, const std::filesystem::path& path);
/// Reads a sidecar and rebuilds factors from `eigs`; lambdas are checked
/// against the per-graph products.
SelectedSpectrum read_spectrum(const std::filesystem::path& path, std::span<const EigenSystem> eigs);

}  // namespace ltlp
