#include "ltlp/model.hpp"

#include "ltlp/error.hpp"
#include "ltlp/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace ltlp {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void check_dims(const std::vector<std::int64_t>& dims, const SelectedSpectrum& spec) {
    if (spec.rank() == 0)
        throw validation_error("compress: empty spectrum");
    if (dims.size() != spec.order())
        throw validation_error("compress: tensor order " + std::to_string(dims.size()) +
                               " does not match " + std::to_string(spec.order()) + " graphs");
    for (std::size_t l = 0; l < dims.size(); ++l)
        if (dims[l] != spec.factors[l].rows())
            throw validation_error("compress: mode " + std::to_string(l) + " has size " +
                                   std::to_string(dims[l]) + " but graph has " +
                                   std::to_string(spec.factors[l].rows()) + " vertices");
}

Eigen::VectorXd compress_per_column(const SparseTensor& t, const SelectedSpectrum& spec,
                                    unsigned threads) {
    const std::size_t k = spec.rank();
    Eigen::VectorXd v(static_cast<Eigen::Index>(k));
    parallel_for(k, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<Eigen::VectorXd> cols(spec.order());
        for (std::size_t j = begin; j < end; ++j) {
            for (std::size_t l = 0; l < spec.order(); ++l)
                cols[l] = spec.factors[l].col(static_cast<Eigen::Index>(j));
            v[static_cast<Eigen::Index>(j)] = ttv_all(t, cols);
        }
    });
    return v;
}

Eigen::VectorXd compress_cp(const CPTensor& t, const SelectedSpectrum& spec) {
    Eigen::MatrixXd psi = spec.factors[0].transpose() * t.factors()[0];
    for (std::size_t l = 1; l < spec.order(); ++l)
        psi.array() *= (spec.factors[l].transpose() * t.factors()[l]).array();
    return psi.rowwise().sum();
}

}  // namespace

std::vector<std::int64_t> tensor_dims(const InitialTensor& y0) {
    return std::visit([](const auto& t) { return std::vector<std::int64_t>(t.dims()); }, y0);
}

Eigen::VectorXd compress(const InitialTensor& y0, const SelectedSpectrum& spec, CompressPath path,
                         unsigned threads) {
    check_dims(tensor_dims(y0), spec);
    if (const auto* cp = std::get_if<CPTensor>(&y0)) return compress_cp(*cp, spec);
    const auto& sparse = std::get<SparseTensor>(y0);
    return path == CompressPath::matricized ? matricized_compress(sparse, spec, threads)
                                            : compress_per_column(sparse, spec, threads);
}

std::size_t TupleHash::operator()(const std::vector<std::int32_t>& t) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto i : t) {
        h ^= static_cast<std::uint32_t>(i);
        h *= 1099511628211ull;
    }
    return h;
}

PropagationModel::PropagationModel(SelectedSpectrum spec, std::shared_ptr<const InitialTensor> y0,
                                   Eigen::VectorXd compressed)
    : spec_(std::move(spec)), y0_(std::move(y0)), v_(std::move(compressed)) {
    if (!y0_)
        throw validation_error("propagation model needs an initial tensor");
    dims_ = tensor_dims(*y0_);
    check_dims(dims_, spec_);
    if (static_cast<std::size_t>(v_.size()) != spec_.rank())
        throw validation_error("compressed vector length does not match rank");

    std::vector<double> m = filter_weights(spec_);
    v_hat_ = v_.array() * Eigen::Map<const Eigen::ArrayXd>(m.data(), static_cast<Eigen::Index>(m.size()));

    if (const auto* sparse = std::get_if<SparseTensor>(y0_.get())) {
        lookup_.reserve(sparse->nnz());
        for (std::size_t e = 0; e < sparse->nnz(); ++e) {
            auto idx = sparse->index(e);
            lookup_.emplace(std::vector<std::int32_t>(idx.begin(), idx.end()), sparse->value(e));
        }
    }
}

void PropagationModel::check_index(std::span<const std::int32_t> idx) const {
    if (idx.size() != dims_.size())
        throw validation_error("query has " + std::to_string(idx.size()) + " indices, expected " +
                               std::to_string(dims_.size()));
    for (std::size_t l = 0; l < idx.size(); ++l)
        if (idx[l] < 0 || idx[l] >= dims_[l])
            throw validation_error("query index " + std::to_string(idx[l]) +
                                   " out of range in mode " + std::to_string(l));
}

double PropagationModel::initial_value(std::span<const std::int32_t> idx) const {
    check_index(idx);
    if (const auto* cp = std::get_if<CPTensor>(y0_.get())) return cp_entry(*cp, idx);
    auto it = lookup_.find(std::vector<std::int32_t>(idx.begin(), idx.end()));
    return it == lookup_.end() ? 0.0 : it->second;
}

double PropagationModel::score(std::span<const std::int32_t> idx) const {
    double y0 = initial_value(idx);
    Eigen::ArrayXd prod = v_hat_.array();
    for (std::size_t l = 0; l < spec_.order(); ++l)
        prod *= spec_.factors[l].row(idx[l]).transpose().array();
    return (1.0 - spec_.alpha) * (prod.sum() + y0);
}

PropagationModel build_model(std::span<const EigenSystem> eigs,
                             std::shared_ptr<const InitialTensor> y0, double alpha,
                             std::size_t k, const BuildOptions& opts) {
    if (!y0)
        throw validation_error("build_model: missing initial tensor");
    auto dims = tensor_dims(*y0);
    if (dims.size() != eigs.size())
        throw validation_error("build_model: tensor order does not match number of graphs");
    for (std::size_t l = 0; l < dims.size(); ++l)
        if (dims[l] != eigs[l].size())
            throw validation_error("build_model: mode " + std::to_string(l) +
                                   " size does not match graph size");

    auto start = std::chrono::steady_clock::now();
    SelectedSpectrum spec = select_eigenpairs(eigs, alpha, k, opts.select);
    double select_s = seconds_since(start);

    start = std::chrono::steady_clock::now();
    Eigen::VectorXd v = compress(*y0, spec, opts.path, opts.threads);
    double compress_s = seconds_since(start);

    PropagationModel model(std::move(spec), std::move(y0), std::move(v));
    model.timings.select_seconds = select_s;
    model.timings.compress_seconds = compress_s;
    return model;
}

PropagationModel build_model(std::span<const Graph> graphs,
                             std::shared_ptr<const InitialTensor> y0, double alpha,
                             std::size_t k, const BuildOptions& opts) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw validation_error("alpha must lie in (0, 1)");
    auto start = std::chrono::steady_clock::now();
    std::vector<EigenSystem> eigs = decompose_all(graphs, opts.threads);
    double eigen_s = seconds_since(start);
    PropagationModel model = build_model(eigs, std::move(y0), alpha, k, opts);
    model.timings.eigen_seconds = eigen_s;
    return model;
}

ScoreTable predict(const PropagationModel& model,
                   std::span<const std::vector<std::int32_t>> queries, unsigned threads) {
    std::vector<std::vector<std::int32_t>> distinct(queries.begin(), queries.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    ScoreTable table(distinct.size());
    parallel_for(distinct.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t q = begin; q < end; ++q)
            table[q] = {distinct[q], model.score(distinct[q])};
    });
    // `distinct` is already in tuple order, so a stable sort keeps it as tie-break.
    std::stable_sort(table.begin(), table.end(),
                     [](const ScoredTuple& a, const ScoredTuple& b) { return a.score > b.score; });
    return table;
}

std::vector<std::vector<std::int32_t>> read_queries(const std::filesystem::path& path,
                                                    std::size_t order) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open query file " + path.string());
    std::vector<std::vector<std::int32_t>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::vector<std::int32_t> t;
        std::int64_t i;
        while (ls >> i) t.push_back(static_cast<std::int32_t>(i));
        if (!ls.eof())
            throw validation_error(path.string() + ":" + std::to_string(line_no) +
                                   ": non-integer token in query");
        if (t.empty()) continue;
        if (t.size() != order)
            throw validation_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                   std::to_string(order) + " indices");
        out.push_back(std::move(t));
    }
    return out;
}

void write_score_table(const ScoreTable& table, const std::filesystem::path& path) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out)
            throw io_error("cannot write output file " + tmp.string());
        out << std::setprecision(17);
        for (const auto& row : table) {
            for (auto i : row.index) out << i << '\t';
            out << row.score << '\n';
        }
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw io_error("failed writing output file " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw io_error("cannot move output into place at " + path.string());
    }
}

}  // namespace ltlp
