#pragma once

#include "ltlp/graph.hpp"
#include "ltlp/spectrum.hpp"
#include "ltlp/tensor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <unordered_map>
#include <variant>
#include <vector>

namespace ltlp {

/// The initial label tensor Y0, either sparse or CP form.
using InitialTensor = std::variant<SparseTensor, CPTensor>;

std::vector<std::int64_t> tensor_dims(const InitialTensor& y0);

enum class CompressPath { per_column, matricized };

/// Projects Y0 onto the selected product eigenvectors: v_j = <q_j, vec(Y0)>.
/// Sparse input contracts every nonzero against every column, O(nnz n k);
/// CP input uses the Hadamard product of the k x r Gram matrices Q_i^T F_i.
Eigen::VectorXd compress(const InitialTensor& y0, const SelectedSpectrum& spec,
                         CompressPath path = CompressPath::matricized, unsigned threads = 0);

struct StageTimings {
    double eigen_seconds = 0.0;
    double select_seconds = 0.0;
    double compress_seconds = 0.0;
};

struct TupleHash {
    std::size_t operator()(const std::vector<std::int32_t>& t) const noexcept;
};

/// Everything needed to score any entry of the propagated tensor in O(nk).
class PropagationModel {
public:
    PropagationModel(SelectedSpectrum spec, std::shared_ptr<const InitialTensor> y0,
                     Eigen::VectorXd compressed);

    double alpha() const { return spec_.alpha; }
    std::size_t rank() const { return spec_.rank(); }
    std::size_t order() const { return spec_.order(); }
    const std::vector<std::int64_t>& dims() const { return dims_; }
    const SelectedSpectrum& spectrum() const { return spec_; }
    const Eigen::VectorXd& compressed() const { return v_; }
    const Eigen::VectorXd& filtered() const { return v_hat_; }
    const InitialTensor& initial() const { return *y0_; }

    /// Y0 at idx: 0 for absent sparse entries, cp_entry for CP input.
    double initial_value(std::span<const std::int32_t> idx) const;

    /// (1 - alpha) (sum_j vhat_j prod_l Q_l[i_l, j] + Y0[idx]).
    double score(std::span<const std::int32_t> idx) const;

    StageTimings timings;

private:
    void check_index(std::span<const std::int32_t> idx) const;

    SelectedSpectrum spec_;
    std::shared_ptr<const InitialTensor> y0_;
    std::vector<std::int64_t> dims_;
    Eigen::VectorXd v_;
    Eigen::VectorXd v_hat_;
    std::unordered_map<std::vector<std::int32_t>, double, TupleHash> lookup_;
};

struct BuildOptions {
    CompressPath path = CompressPath::matricized;
    unsigned threads = 0;
    SelectOptions select;
};

/// Selects the spectrum from pre-decomposed graphs, compresses Y0 and applies
/// the spectral filter.
PropagationModel build_model(std::span<const EigenSystem> eigs,
                             std::shared_ptr<const InitialTensor> y0, double alpha,
                             std::size_t k, const BuildOptions& opts = {});

/// Same, starting from raw graphs (normalize + eigendecompose first).
PropagationModel build_model(std::span<const Graph> graphs,
                             std::shared_ptr<const InitialTensor> y0, double alpha,
                             std::size_t k, const BuildOptions& opts = {});

struct ScoredTuple {
    std::vector<std::int32_t> index;
    double score;
};

/// One row per distinct query, sorted by score descending, then tuple ascending.
using ScoreTable = std::vector<ScoredTuple>;

ScoreTable predict(const PropagationModel& model, std::span<const std::vector<std::int32_t>> queries,
                   unsigned threads = 0);

/// Query file: one tuple `i_1 .. i_n` per line; blank and `#` lines ignored.
std::vector<std::vector<std::int32_t>> read_queries(const std::filesystem::path& path,
                                                    std::size_t order);

/// TSV `i_1 .. i_n score` in table order, written to a temporary file and
/// renamed into place.
void write_score_table(const ScoreTable& table, const std::filesystem::path& path);

}  // namespace ltlp
