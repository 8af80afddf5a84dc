#include "ltlp/tensor.hpp"

#include "ltlp/error.hpp"
#include "ltlp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>

namespace ltlp {

SparseTensor::SparseTensor(std::vector<std::int64_t> dims, std::vector<std::int32_t> indices,
                           std::vector<double> values)
    : dims_(std::move(dims)) {
    const std::size_t n = dims_.size();
    if (n == 0)
        throw validation_error("sparse tensor needs at least one mode");
    for (auto d : dims_)
        if (d <= 0) throw validation_error("sparse tensor dimensions must be positive");
    if (indices.size() != values.size() * n)
        throw validation_error("sparse tensor index array does not match value count");

    const std::size_t nnz = values.size();
    for (std::size_t e = 0; e < nnz; ++e) {
        if (!std::isfinite(values[e]))
            throw validation_error("sparse tensor value is not finite");
        for (std::size_t l = 0; l < n; ++l) {
            auto i = indices[e * n + l];
            if (i < 0 || i >= dims_[l])
                throw validation_error("sparse tensor index out of range in mode " +
                                       std::to_string(l));
        }
    }

    std::vector<std::size_t> order(nnz);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto tuple_at = [&](std::size_t e) {
        return std::span<const std::int32_t>(indices.data() + e * n, n);
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        auto ta = tuple_at(a), tb = tuple_at(b);
        return std::lexicographical_compare(ta.begin(), ta.end(), tb.begin(), tb.end());
    });

    indices_.reserve(indices.size());
    values_.reserve(nnz);
    for (std::size_t r = 0; r < nnz; ++r) {
        auto t = tuple_at(order[r]);
        if (r > 0 && std::equal(t.begin(), t.end(), tuple_at(order[r - 1]).begin()))
            throw validation_error("duplicate sparse tensor entry");
        indices_.insert(indices_.end(), t.begin(), t.end());
        values_.push_back(values[order[r]]);
    }
}

CPTensor::CPTensor(std::vector<Eigen::MatrixXd> factors) : factors_(std::move(factors)) {
    if (factors_.empty())
        throw validation_error("CP tensor needs at least one factor");
    for (const auto& f : factors_) {
        if (f.cols() != factors_.front().cols())
            throw validation_error("CP factors disagree on rank");
        if (f.rows() == 0)
            throw validation_error("CP factor with zero rows");
        if (!f.allFinite())
            throw validation_error("CP factor has non-finite entries");
    }
    if (factors_.front().cols() == 0)
        throw validation_error("CP rank must be at least 1");
}

std::vector<std::int64_t> CPTensor::dims() const {
    std::vector<std::int64_t> d;
    for (const auto& f : factors_) d.push_back(f.rows());
    return d;
}

double ttv_all(const SparseTensor& t, std::span<const Eigen::VectorXd> vectors) {
    const std::size_t n = t.order();
    if (vectors.size() != n)
        throw validation_error("ttv_all: need one vector per mode");
    for (std::size_t l = 0; l < n; ++l)
        if (vectors[l].size() != t.dims()[l])
            throw validation_error("ttv_all: vector length mismatch in mode " + std::to_string(l));

    double sum = 0.0;
    for (std::size_t e = 0; e < t.nnz(); ++e) {
        auto idx = t.index(e);
        double p = t.value(e);
        for (std::size_t l = 0; l < n; ++l) p *= vectors[l][idx[l]];
        sum += p;
    }
    return sum;
}

Eigen::VectorXd matricized_compress(const SparseTensor& t, const SelectedSpectrum& spec,
                                    unsigned threads) {
    const std::size_t n = t.order();
    if (spec.order() != n)
        throw validation_error("matricized_compress: spectrum order does not match tensor");
    for (std::size_t l = 0; l < n; ++l)
        if (spec.factors[l].rows() != t.dims()[l])
            throw validation_error("matricized_compress: dimension mismatch in mode " +
                                   std::to_string(l));

    const auto k = static_cast<Eigen::Index>(spec.rank());
    const Eigen::Index rows = spec.factors[0].rows();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(k);

    // Column blocks of Z = Y_(1) (Q_2 (.) ... (.) Q_n) are independent; each
    // worker owns a contiguous range of j and writes only v[j] for it.
    parallel_for(static_cast<std::size_t>(k), threads, [&](std::size_t begin, std::size_t end) {
        const auto j0 = static_cast<Eigen::Index>(begin);
        const auto width = static_cast<Eigen::Index>(end - begin);
        Eigen::MatrixXd z = Eigen::MatrixXd::Zero(rows, width);
        Eigen::RowVectorXd krp(width);
        for (std::size_t e = 0; e < t.nnz(); ++e) {
            auto idx = t.index(e);
            krp.setConstant(t.value(e));
            for (std::size_t l = 1; l < n; ++l)
                krp.array() *= spec.factors[l].row(idx[l]).segment(j0, width).array();
            z.row(idx[0]) += krp;
        }
        for (Eigen::Index j = 0; j < width; ++j)
            v[j0 + j] = spec.factors[0].col(j0 + j).dot(z.col(j));
    });
    return v;
}

double cp_entry(const CPTensor& t, std::span<const std::int32_t> idx) {
    if (idx.size() != t.order())
        throw validation_error("cp_entry: index arity does not match tensor order");
    Eigen::RowVectorXd prod = Eigen::RowVectorXd::Ones(t.rank());
    for (std::size_t l = 0; l < t.order(); ++l) {
        const auto& f = t.factors()[l];
        if (idx[l] < 0 || idx[l] >= f.rows())
            throw validation_error("cp_entry: index out of range in mode " + std::to_string(l));
        prod.array() *= f.row(idx[l]).array();
    }
    return prod.sum();
}

Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.cols() != b.cols())
        throw validation_error("khatri_rao: column counts differ");
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            out.col(j).segment(i * b.rows(), b.rows()) = a(i, j) * b.col(j);
    return out;
}

Eigen::MatrixXd khatri_rao_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                const Eigen::MatrixXd& c, const Eigen::MatrixXd& d) {
    if (a.cols() != b.cols() || c.cols() != d.cols() || a.rows() != c.rows() ||
        b.rows() != d.rows())
        throw validation_error("khatri_rao_gram: incompatible shapes");
    return ((a.transpose() * c).array() * (b.transpose() * d).array()).matrix();
}

namespace {

std::string strip_comment(const std::string& line) {
    auto pos = line.find('#');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

}  // namespace

SparseTensor read_sparse_tensor(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open tensor file " + path.string());

    std::vector<std::int64_t> dims;
    std::vector<std::int32_t> indices;
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(strip_comment(line));
        std::string first;
        if (!(ls >> first)) continue;
        if (first == "dims") {
            std::int64_t d;
            while (ls >> d) dims.push_back(d);
            if (dims.empty())
                throw validation_error(path.string() + ": empty dims header");
            continue;
        }
        if (dims.empty())
            throw validation_error(path.string() + ": missing dims header before entries");
        std::istringstream es(strip_comment(line));
        for (std::size_t l = 0; l < dims.size(); ++l) {
            std::int64_t i;
            if (!(es >> i))
                throw validation_error(path.string() + ":" + std::to_string(line_no) +
                                       ": expected " + std::to_string(dims.size()) +
                                       " indices and a value");
            if (i < 0 || i >= dims[l])
                throw validation_error(path.string() + ":" + std::to_string(line_no) +
                                       ": index out of range");
            indices.push_back(static_cast<std::int32_t>(i));
        }
        double v;
        if (!(es >> v))
            throw validation_error(path.string() + ":" + std::to_string(line_no) +
                                   ": missing value");
        values.push_back(v);
    }
    if (dims.empty())
        throw validation_error(path.string() + ": missing dims header");
    return SparseTensor(std::move(dims), std::move(indices), std::move(values));
}

void write_sparse_tensor(const SparseTensor& t, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot write tensor file " + path.string());
    out << "dims";
    for (auto d : t.dims()) out << ' ' << d;
    out << '\n' << std::setprecision(17);
    for (std::size_t e = 0; e < t.nnz(); ++e) {
        for (auto i : t.index(e)) out << i << ' ';
        out << t.value(e) << '\n';
    }
    if (!out)
        throw io_error("failed writing tensor file " + path.string());
}

CPTensor read_cp_tensor(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open CP tensor file " + path.string());
    std::string key;
    Eigen::Index rank = 0;
    std::size_t order = 0;
    if (!(in >> key >> rank) || key != "rank" || rank <= 0)
        throw validation_error(path.string() + ": expected `rank r` header");
    if (!(in >> key >> order) || key != "order" || order == 0)
        throw validation_error(path.string() + ": expected `order n` header");
    std::vector<Eigen::MatrixXd> factors;
    for (std::size_t l = 0; l < order; ++l) {
        Eigen::Index rows = 0;
        if (!(in >> key >> rows) || key != "factor" || rows <= 0)
            throw validation_error(path.string() + ": expected `factor I` header for factor " +
                                   std::to_string(l));
        Eigen::MatrixXd f(rows, rank);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index r = 0; r < rank; ++r)
                if (!(in >> f(i, r)))
                    throw validation_error(path.string() + ": truncated factor " +
                                           std::to_string(l));
        factors.push_back(std::move(f));
    }
    return CPTensor(std::move(factors));
}

void write_cp_tensor(const CPTensor& t, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot write CP tensor file " + path.string());
    out << std::setprecision(17) << "rank " << t.rank() << "\norder " << t.order() << '\n';
    for (const auto& f : t.factors()) {
        out << "factor " << f.rows() << '\n';
        for (Eigen::Index i = 0; i < f.rows(); ++i) {
            for (Eigen::Index r = 0; r < f.cols(); ++r) out << (r ? " " : "") << f(i, r);
            out << '\n';
        }
    }
    if (!out)
        throw io_error("failed writing CP tensor file " + path.string());
}

}  // namespace ltlp
