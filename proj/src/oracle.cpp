#include "ltlp/oracle.hpp"

#include "ltlp/error.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <cmath>
#include <sstream>
#include <string>

namespace ltlp::oracle {

namespace {

std::uint64_t total_size(std::span<const std::int64_t> dims) {
    std::uint64_t n = 1;
    for (auto d : dims) {
        if (d <= 0) throw validation_error("dimensions must be positive");
        if (n > UINT64_MAX / static_cast<std::uint64_t>(d)) return UINT64_MAX;
        n *= static_cast<std::uint64_t>(d);
    }
    return n;
}

void check_cap(std::uint64_t size, std::uint64_t cap, const char* what) {
    if (size > cap)
        throw validation_error(std::string(what) + " of size " + std::to_string(size) +
                               " exceeds dense oracle cap " + std::to_string(cap));
}

std::vector<std::int64_t> graph_dims(std::span<const NormalizedGraph> graphs) {
    std::vector<std::int64_t> dims;
    for (const auto& g : graphs) dims.push_back(g.size());
    return dims;
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw validation_error("alpha must lie in (0, 1)");
}

void check_shape(std::span<const NormalizedGraph> graphs, const DenseTensor& y0) {
    if (graph_dims(graphs) != y0.dims)
        throw validation_error("tensor dimensions do not match graph sizes");
}

}  // namespace

std::uint64_t DenseTensor::linear(std::span<const std::int32_t> idx) const {
    if (idx.size() != dims.size())
        throw validation_error("index arity does not match tensor order");
    std::uint64_t lin = 0;
    for (std::size_t l = 0; l < dims.size(); ++l) {
        if (idx[l] < 0 || idx[l] >= dims[l])
            throw validation_error("index out of range in mode " + std::to_string(l));
        lin = lin * static_cast<std::uint64_t>(dims[l]) + static_cast<std::uint64_t>(idx[l]);
    }
    return lin;
}

DenseTensor densify(const InitialTensor& y0, std::uint64_t cap) {
    DenseTensor out;
    out.dims = tensor_dims(y0);
    std::uint64_t n = total_size(out.dims);
    check_cap(n, cap, "tensor");
    out.data = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    if (const auto* sparse = std::get_if<SparseTensor>(&y0)) {
        for (std::size_t e = 0; e < sparse->nnz(); ++e)
            out.data[static_cast<Eigen::Index>(out.linear(sparse->index(e)))] = sparse->value(e);
        return out;
    }
    const auto& cp = std::get<CPTensor>(y0);
    std::vector<std::int32_t> idx(out.dims.size(), 0);
    for (std::uint64_t lin = 0; lin < n; ++lin) {
        out.data[static_cast<Eigen::Index>(lin)] = cp_entry(cp, idx);
        for (std::size_t l = idx.size(); l-- > 0;) {
            if (++idx[l] < out.dims[l]) break;
            idx[l] = 0;
        }
    }
    return out;
}

Eigen::MatrixXd kron_all(std::span<const Eigen::MatrixXd> mats, std::uint64_t cap) {
    if (mats.empty())
        throw validation_error("kron_all: no matrices");
    std::uint64_t rows = 1, cols = 1;
    for (const auto& m : mats) {
        rows *= static_cast<std::uint64_t>(m.rows());
        cols *= static_cast<std::uint64_t>(m.cols());
    }
    check_cap(std::max(rows, cols), cap, "Kronecker product");

    Eigen::MatrixXd out = mats[0];
    for (std::size_t i = 1; i < mats.size(); ++i) {
        const Eigen::MatrixXd& b = mats[i];
        Eigen::MatrixXd next(out.rows() * b.rows(), out.cols() * b.cols());
        for (Eigen::Index r = 0; r < out.rows(); ++r)
            for (Eigen::Index c = 0; c < out.cols(); ++c)
                next.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = out(r, c) * b;
        out = std::move(next);
    }
    return out;
}

DenseTensor mode_product(const DenseTensor& y, std::size_t mode, const Eigen::MatrixXd& m) {
    if (mode >= y.dims.size())
        throw validation_error("mode_product: mode out of range");
    const std::int64_t len = y.dims[mode];
    if (m.cols() != len)
        throw validation_error("mode_product: matrix columns do not match mode size");
    std::int64_t outer = 1, inner = 1;
    for (std::size_t l = 0; l < mode; ++l) outer *= y.dims[l];
    for (std::size_t l = mode + 1; l < y.dims.size(); ++l) inner *= y.dims[l];

    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    DenseTensor out;
    out.dims = y.dims;
    out.dims[mode] = m.rows();
    out.data.resize(outer * m.rows() * inner);
    for (std::int64_t o = 0; o < outer; ++o) {
        Eigen::Map<const RowMajor> in_block(y.data.data() + o * len * inner, len, inner);
        Eigen::Map<RowMajor> out_block(out.data.data() + o * m.rows() * inner, m.rows(), inner);
        out_block.noalias() = m * in_block;
    }
    return out;
}

IterateResult exact_iterate(std::span<const NormalizedGraph> graphs, const DenseTensor& y0,
                            double alpha, const IterateOptions& opts) {
    check_alpha(alpha);
    check_shape(graphs, y0);
    check_cap(total_size(y0.dims), kDefaultTensorCap, "tensor");

    IterateResult res;
    res.y = y0;
    for (std::size_t t = 0; t < opts.max_iters; ++t) {
        DenseTensor next = res.y;
        for (std::size_t l = 0; l < graphs.size(); ++l)
            next = mode_product(next, l, graphs[l].matrix());
        next.data = alpha * next.data + (1.0 - alpha) * y0.data;
        double step = (next.data - res.y.data).norm();
        res.y = std::move(next);
        res.step_norms.push_back(step);
        res.iterations = t + 1;
        if (opts.stop_tol > 0.0 && step <= opts.stop_tol) break;
    }
    return res;
}

ClosedForm exact_closed_form(std::span<const NormalizedGraph> graphs, const DenseTensor& y0,
                             double alpha, std::uint64_t tensor_cap, std::uint64_t matrix_cap) {
    check_alpha(alpha);
    check_shape(graphs, y0);
    const std::uint64_t n = total_size(y0.dims);
    check_cap(n, tensor_cap, "tensor");

    ClosedForm cf;

    // Eigen form: rotate into the product eigenbasis, scale, rotate back.
    std::vector<EigenSystem> eigs;
    for (const auto& g : graphs) eigs.push_back(eigendecompose(g));
    DenseTensor z = y0;
    for (std::size_t l = 0; l < graphs.size(); ++l)
        z = mode_product(z, l, eigs[l].vectors.transpose());
    std::vector<std::int32_t> idx(y0.dims.size(), 0);
    for (std::uint64_t lin = 0; lin < n; ++lin) {
        double lambda = 1.0;
        for (std::size_t l = 0; l < idx.size(); ++l) lambda *= eigs[l].values[idx[l]];
        z.data[static_cast<Eigen::Index>(lin)] *= (1.0 - alpha) / (1.0 - alpha * lambda);
        for (std::size_t l = idx.size(); l-- > 0;) {
            if (++idx[l] < y0.dims[l]) break;
            idx[l] = 0;
        }
    }
    for (std::size_t l = 0; l < graphs.size(); ++l) z = mode_product(z, l, eigs[l].vectors);
    cf.eigen = std::move(z);

    if (n <= matrix_cap) {
        std::vector<Eigen::MatrixXd> mats;
        for (const auto& g : graphs) mats.push_back(g.matrix());
        Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - alpha * kron_all(mats, matrix_cap);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
        cf.direct.dims = y0.dims;
        cf.direct.data = lu.solve((1.0 - alpha) * y0.data);
        if (!cf.direct.data.allFinite())
            throw numerical_error("closed form: dense solve produced non-finite values");
        cf.max_path_gap = (cf.direct.data - cf.eigen.data).cwiseAbs().maxCoeff();
        if (cf.max_path_gap > 1e-9) {
            std::ostringstream msg;
            msg << "closed form: direct and eigen paths differ by " << cf.max_path_gap;
            throw numerical_error(msg.str());
        }
    }
    return cf;
}

Eigen::MatrixXd transform(std::span<const NormalizedGraph> graphs, double alpha, std::uint64_t cap) {
    check_alpha(alpha);
    std::vector<Eigen::MatrixXd> mats;
    for (const auto& g : graphs) mats.push_back(g.matrix());
    Eigen::MatrixXd s = kron_all(mats, cap);
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(s.rows(), s.cols()) - alpha * s;
    return system.inverse();
}

Eigen::MatrixXd approx_transform(const SelectedSpectrum& spec, std::uint64_t cap) {
    if (spec.order() == 0)
        throw validation_error("approx_transform: empty spectrum");
    std::uint64_t n = 1;
    for (const auto& f : spec.factors) n *= static_cast<std::uint64_t>(f.rows());
    check_cap(n, cap, "transform");
    const auto size = static_cast<Eigen::Index>(n);
    if (spec.rank() == 0) return Eigen::MatrixXd::Identity(size, size);

    Eigen::MatrixXd q = spec.factors[0];
    for (std::size_t l = 1; l < spec.order(); ++l) q = khatri_rao(q, spec.factors[l]);
    std::vector<double> m = filter_weights(spec);
    Eigen::Map<const Eigen::VectorXd> mv(m.data(), static_cast<Eigen::Index>(m.size()));
    return Eigen::MatrixXd::Identity(size, size) + q * mv.asDiagonal() * q.transpose();
}

Eigen::MatrixXd best_rank_k_transform(std::span<const NormalizedGraph> graphs, double alpha,
                                      std::size_t k, std::uint64_t cap) {
    Eigen::MatrixXd a = transform(graphs, alpha, cap);
    const Eigen::Index n = a.rows();
    if (k == 0) return Eigen::MatrixXd::Zero(n, n);
    if (static_cast<Eigen::Index>(k) >= n) return a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (a + a.transpose()));
    if (solver.info() != Eigen::Success)
        throw numerical_error("best_rank_k_transform: eigensolver did not converge");
    // Ascending eigenvalues, all positive: the last k carry the largest singular values.
    const auto kk = static_cast<Eigen::Index>(k);
    Eigen::MatrixXd v = solver.eigenvectors().rightCols(kk);
    Eigen::VectorXd d = solver.eigenvalues().tail(kk);
    return v * d.asDiagonal() * v.transpose();
}

double spectral_norm_sym(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (m + m.transpose()),
                                                          Eigen::EigenvaluesOnly);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}


namespace {

std::vector<double> product_scores(std::span<const EigenSystem> eigs, double alpha) {
    std::uint64_t n = product_size(eigs);
    std::vector<double> scores;
    scores.reserve(n);
    std::vector<Eigen::Index> idx(eigs.size(), 0);
    for (std::uint64_t lin = 0; lin < n; ++lin) {
        double lambda = 1.0;
        for (std::size_t l = 0; l < eigs.size(); ++l) lambda *= eigs[l].values[idx[l]];
        scores.push_back(selection_score(lambda, alpha));
        for (std::size_t l = idx.size(); l-- > 0;) {
            if (++idx[l] < eigs[l].size()) break;
            idx[l] = 0;
        }
    }
    return scores;
}

double binomial(std::uint64_t n, std::uint64_t k) {
    double c = 1.0;
    for (std::uint64_t i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    return c;
}

constexpr double kSubsetLimit = 2e5;

}  // namespace

double min_frobenius_over_subsets(std::span<const EigenSystem> eigs, double alpha, std::size_t k) {
    std::vector<double> scores = product_scores(eigs, alpha);
    const std::size_t n = scores.size();
    if (k > n) k = n;
    double total = 0.0;
    for (double s : scores) total += s * s;

    std::vector<std::size_t> pick(k);
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        double kept = 0.0;
        for (auto p : pick) kept += scores[p] * scores[p];
        best = std::min(best, std::sqrt(std::max(0.0, total - kept)));
        // Next combination in lexicographic order.
        std::size_t i = k;
        while (i > 0 && pick[i - 1] == n - k + i - 1) --i;
        if (i == 0) break;
        ++pick[i - 1];
        for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
    return best;
}

CheckReport check_instance(std::span<const Graph> graphs, const InitialTensor& y0, double alpha,
                           std::size_t rank, std::uint64_t matrix_cap) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw validation_error("alpha must lie in (0, 1)");
    if (rank == 0)
        throw validation_error("rank must be at least 1");

    std::vector<NormalizedGraph> normalized;
    std::vector<EigenSystem> eigs;
    for (const auto& g : graphs) {
        normalized.push_back(normalize(g));
        eigs.push_back(eigendecompose(normalized.back()));
    }
    CheckReport rep;
    rep.product_size = product_size(eigs);
    check_cap(rep.product_size, matrix_cap, "instance");
    const auto n = static_cast<std::size_t>(rep.product_size);
    rep.rank = std::min(rank, n);

    DenseTensor dense_y0 = densify(y0);
    ClosedForm exact = exact_closed_form(normalized, dense_y0, alpha);
    rep.closed_form_gap = exact.max_path_gap;

    auto shared_y0 = std::make_shared<const InitialTensor>(y0);
    auto max_deviation = [&](const PropagationModel& model) {
        double dev = 0.0;
        std::vector<std::int32_t> idx(dense_y0.dims.size(), 0);
        for (std::size_t lin = 0; lin < n; ++lin) {
            dev = std::max(dev, std::abs(model.score(idx) - exact.direct.data[static_cast<Eigen::Index>(lin)]));
            for (std::size_t l = idx.size(); l-- > 0;) {
                if (++idx[l] < dense_y0.dims[l]) break;
                idx[l] = 0;
            }
        }
        return dev;
    };

    BuildOptions opts;
    opts.threads = 1;
    PropagationModel full = build_model(std::span<const EigenSystem>(eigs), shared_y0, alpha, n, opts);
    rep.full_rank_deviation = max_deviation(full);
    rep.full_rank_pass = rep.full_rank_deviation <= kFullRankTolerance;

    PropagationModel model = build_model(std::span<const EigenSystem>(eigs), shared_y0, alpha, rep.rank, opts);
    rep.lowrank_deviation = max_deviation(model);
    rep.perturbation = perturbation_norms(eigs, model.spectrum(), alpha, rep.product_size);

    Eigen::MatrixXd a = transform(normalized, alpha, matrix_cap);
    Eigen::MatrixXd diff = approx_transform(model.spectrum(), matrix_cap) - a;
    rep.dense_perturbation = {spectral_norm_sym(diff), diff.norm()};
    rep.error_bound = (1.0 - alpha) * rep.dense_perturbation.spectral * dense_y0.data.norm();

    rep.rank_k_comparison_applicable = rep.rank < n;
    if (rep.rank_k_comparison_applicable) {
        Eigen::MatrixXd best_diff = best_rank_k_transform(normalized, alpha, rep.rank, matrix_cap) - a;
        rep.best_rank_k = {spectral_norm_sym(best_diff), best_diff.norm()};
        rep.rank_k_comparison_pass = rep.dense_perturbation.spectral < rep.best_rank_k.spectral &&
                           rep.dense_perturbation.frobenius < rep.best_rank_k.frobenius;
    } else {
        rep.rank_k_comparison_pass = true;
    }

    double best;
    if (binomial(n, rep.rank) <= kSubsetLimit) {
        best = min_frobenius_over_subsets(eigs, alpha, rep.rank);
        rep.selection_by_subsets = true;
    } else {
        std::vector<double> scores = product_scores(eigs, alpha);
        std::sort(scores.begin(), scores.end(), std::greater<>());
        double rest = 0.0;
        for (std::size_t i = rep.rank; i < scores.size(); ++i) rest += scores[i] * scores[i];
        best = std::sqrt(rest);
    }
    rep.selection_gap = rep.perturbation.frobenius - best;
    rep.selection_pass = rep.selection_gap <= 1e-12 * std::max(1.0, best);
    return rep;
}

}  // namespace ltlp::oracle
