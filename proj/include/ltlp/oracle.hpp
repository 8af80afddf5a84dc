#pragma once

#include "ltlp/graph.hpp"
#include "ltlp/model.hpp"
#include "ltlp/spectrum.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

// Dense reference computations of label propagation on the tensor product
// graph. Exact and slow: everything here materializes prod(I_i) entries (or
// prod(I_i)^2 for transform matrices) and refuses inputs above a cap.
namespace ltlp::oracle {

inline constexpr std::uint64_t kDefaultTensorCap = 1'000'000;
// Transform matrices are N x N.
inline constexpr std::uint64_t kDefaultMatrixCap = 4096;

/// Row-major dense tensor: mode 0 is the slowest index, so the flat vector is
/// vec(Y) for the Kronecker order S_1 (x) S_2 (x) ... (x) S_n.
struct DenseTensor {
    std::vector<std::int64_t> dims;
    Eigen::VectorXd data;

    std::uint64_t linear(std::span<const std::int32_t> idx) const;
    double at(std::span<const std::int32_t> idx) const { return data[static_cast<Eigen::Index>(linear(idx))]; }
};

DenseTensor densify(const InitialTensor& y0, std::uint64_t cap = kDefaultTensorCap);

/// S_1 (x) ... (x) S_n as a dense matrix.
Eigen::MatrixXd kron_all(std::span<const Eigen::MatrixXd> mats, std::uint64_t cap = kDefaultMatrixCap);

/// Y <- Y x_l M applied along one mode.
DenseTensor mode_product(const DenseTensor& y, std::size_t mode, const Eigen::MatrixXd& m);

struct IterateOptions {
    std::size_t max_iters = 100000;
    double stop_tol = 1e-10;  // ||Y^{t+1} - Y^t||_F; 0 runs exactly max_iters steps
};

struct IterateResult {
    DenseTensor y;
    std::size_t iterations = 0;
    std::vector<double> step_norms;  // ||Y^{t+1} - Y^t||_F per iteration
};

/// Y^{t+1} = alpha Y^t x_1 S_1 ... x_n S_n + (1 - alpha) Y^0, from Y^0.
IterateResult exact_iterate(std::span<const NormalizedGraph> graphs, const DenseTensor& y0,
                            double alpha, const IterateOptions& opts = {});

struct ClosedForm {
    DenseTensor direct;  // dense solve of (I - alpha S) x = (1 - alpha) vec(Y0); empty above matrix cap
    DenseTensor eigen;   // (1 - alpha) Q (I - alpha Lambda)^{-1} Q^T vec(Y0) via mode products
    double max_path_gap = 0.0;
};

/// (1 - alpha)(I - alpha S)^{-1} vec(Y0) two ways; throws if the two disagree
/// by more than 1e-9.
ClosedForm exact_closed_form(std::span<const NormalizedGraph> graphs, const DenseTensor& y0,
                             double alpha, std::uint64_t tensor_cap = kDefaultTensorCap,
                             std::uint64_t matrix_cap = kDefaultMatrixCap);

/// A = (I - alpha S)^{-1}.
Eigen::MatrixXd transform(std::span<const NormalizedGraph> graphs, double alpha,
                          std::uint64_t cap = kDefaultMatrixCap);

/// A_hat = I + Q_{1:k} M Q_{1:k}^T for a selected spectrum.
Eigen::MatrixXd approx_transform(const SelectedSpectrum& spec, std::uint64_t cap = kDefaultMatrixCap);

/// Best rank-k approximation of A (A is symmetric positive definite, so this
/// keeps its k largest eigenpairs). k = 0 gives the zero matrix.
Eigen::MatrixXd best_rank_k_transform(std::span<const NormalizedGraph> graphs, double alpha,
                                      std::size_t k, std::uint64_t cap = kDefaultMatrixCap);

/// Largest singular value of a symmetric matrix.
double spectral_norm_sym(const Eigen::MatrixXd& m);


struct CheckReport {
    std::size_t rank = 0;
    std::uint64_t product_size = 0;

    // LowrankTLP at full rank against the dense closed form, over every entry.
    double full_rank_deviation = 0.0;
    double closed_form_gap = 0.0;  // direct vs eigen path

    // At the requested rank.
    double lowrank_deviation = 0.0;   // max |score_k - exact|
    double error_bound = 0.0;         // (1 - alpha) ||A_hat - A||_2 ||vec(Y0)||_2
    PerturbationNorms perturbation;   // from the unselected spectrum
    PerturbationNorms dense_perturbation;   // ||A_hat - A|| computed densely
    PerturbationNorms best_rank_k;          // ||A_k - A|| computed densely
    bool rank_k_comparison_applicable = false;        // rank < product size

    // Exhaustive search for the minimum Frobenius perturbation.
    double selection_gap = 0.0;        // selected objective minus best objective
    bool selection_by_subsets = false; // true: all C(N, k) subsets; false: full sort of N scores

    bool full_rank_pass = false;
    bool rank_k_comparison_pass = false;
    bool selection_pass = false;
    bool pass() const { return full_rank_pass && rank_k_comparison_pass && selection_pass; }
};

inline constexpr double kFullRankTolerance = 1e-8;

/// Runs the dense comparisons behind `oracle-check` on one small instance.
CheckReport check_instance(std::span<const Graph> graphs, const InitialTensor& y0, double alpha,
                           std::size_t rank, std::uint64_t matrix_cap = kDefaultMatrixCap);

/// Minimum Frobenius perturbation over every k-subset of the product spectrum
/// (brute force; caller bounds C(N, k)).
double min_frobenius_over_subsets(std::span<const EigenSystem> eigs, double alpha, std::size_t k);

}  // namespace ltlp::oracle
