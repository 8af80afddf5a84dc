#include "ltlp/spectrum.hpp"

#include "ltlp/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace ltlp {

namespace {

constexpr double kDenominatorEps = 1e-15;

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw validation_error("alpha must lie in (0, 1)");
}

// One entry of Gamma at a recursion level: product value, the retained
// candidate of the previous level it extends, and the eigenvector column of
// the current graph.
struct Extension {
    double value;
    std::uint32_t parent;
    std::uint32_t col;
};

// Retained candidates of one level with their tuples stored flat.
struct Level {
    std::size_t width = 0;  // tuple length
    std::vector<double> values;
    std::vector<std::int32_t> tuples;

    std::size_t count() const { return values.size(); }
    std::span<const std::int32_t> tuple(std::size_t r) const {
        return {tuples.data() + r * width, width};
    }
};

// Sorts `ext` so the lexicographic tuple order of extensions equals
// (parent_rank[parent], col), parent_rank being the lex rank of parent tuples.
std::vector<std::uint32_t> lex_ranks(const Level& level) {
    std::vector<std::uint32_t> order(level.count());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        auto ta = level.tuple(a), tb = level.tuple(b);
        return std::lexicographical_compare(ta.begin(), ta.end(), tb.begin(), tb.end());
    });
    std::vector<std::uint32_t> rank(level.count());
    for (std::uint32_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
    return rank;
}

Level extend(const Level& prev, std::span<const Extension> kept) {
    Level next;
    next.width = prev.width + 1;
    next.values.reserve(kept.size());
    next.tuples.reserve(kept.size() * next.width);
    for (const Extension& e : kept) {
        next.values.push_back(e.value);
        auto t = prev.tuple(e.parent);
        next.tuples.insert(next.tuples.end(), t.begin(), t.end());
        next.tuples.push_back(static_cast<std::int32_t>(e.col));
    }
    return next;
}

// Keeps the `window` largest and `window` smallest extensions by value,
// ties resolved toward the lexicographically smaller tuple at both ends.
std::vector<Extension> prune(std::vector<Extension> gamma, std::size_t window,
                             const std::vector<std::uint32_t>& parent_rank) {
    if (gamma.size() <= 2 * window) return gamma;
    auto lex_less = [&](const Extension& a, const Extension& b) {
        if (parent_rank[a.parent] != parent_rank[b.parent])
            return parent_rank[a.parent] < parent_rank[b.parent];
        return a.col < b.col;
    };
    auto top_order = [&](const Extension& a, const Extension& b) {
        if (a.value != b.value) return a.value > b.value;
        return lex_less(a, b);
    };
    auto bot_order = [&](const Extension& a, const Extension& b) {
        if (a.value != b.value) return a.value < b.value;
        return lex_less(a, b);
    };
    std::vector<Extension> kept;
    kept.reserve(2 * window);
    std::nth_element(gamma.begin(), gamma.begin() + window, gamma.end(), top_order);
    kept.insert(kept.end(), gamma.begin(), gamma.begin() + window);
    // Bottom window is taken from the remainder so the two ends stay disjoint.
    auto rest = gamma.begin() + window;
    std::nth_element(rest, rest + window, gamma.end(), bot_order);
    kept.insert(kept.end(), rest, rest + window);
    return kept;
}

bool tuple_less(const IndexTuple& a, const IndexTuple& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

double selection_score(double lambda, double alpha) {
    return alpha * std::abs(lambda) / std::max(1.0 - alpha * lambda, kDenominatorEps);
}

std::uint64_t product_size(std::span<const EigenSystem> eigs) {
    std::uint64_t n = 1;
    for (const auto& e : eigs) {
        auto s = static_cast<std::uint64_t>(e.size());
        if (s != 0 && n > std::numeric_limits<std::uint64_t>::max() / s)
            return std::numeric_limits<std::uint64_t>::max();
        n *= s;
    }
    return n;
}

std::vector<ScoredCandidate> top_bot_2k(std::span<const ScoredCandidate> values, std::size_t k) {
    if (values.empty())
        throw validation_error("top_bot_2k: empty input");
    if (k == 0)
        throw validation_error("top_bot_2k: k must be at least 1");

    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto desc = [&](std::size_t a, std::size_t b) {
        if (values[a].value != values[b].value) return values[a].value > values[b].value;
        return tuple_less(values[a].index, values[b].index);
    };
    std::sort(order.begin(), order.end(), desc);

    std::vector<std::size_t> keep;
    if (order.size() <= 2 * k) {
        keep = order;
    } else {
        keep.assign(order.begin(), order.begin() + k);
        // Smallest k; among equal values the lexicographically smaller tuples
        // sit earlier in `order`, so scan the tied block from its start.
        std::vector<std::size_t> tail(order.begin() + k, order.end());
        std::stable_sort(tail.begin(), tail.end(), [&](std::size_t a, std::size_t b) {
            return values[a].value < values[b].value;
        });
        keep.insert(keep.end(), tail.begin(), tail.begin() + k);
        std::sort(keep.begin(), keep.end(), desc);
    }

    std::vector<ScoredCandidate> out;
    out.reserve(keep.size());
    for (std::size_t i : keep) out.push_back(values[i]);
    return out;
}

SelectedSpectrum select_eigenpairs(std::span<const EigenSystem> eigs, double alpha, std::size_t k,
                                   const SelectOptions& opts) {
    check_alpha(alpha);
    if (eigs.empty())
        throw validation_error("select_eigenpairs: no graphs");
    if (k == 0)
        throw validation_error("select_eigenpairs: k must be at least 1");
    for (const auto& e : eigs)
        if (e.size() == 0 || e.vectors.rows() != e.size() || e.vectors.cols() != e.size())
            throw validation_error("select_eigenpairs: malformed eigensystem");

    std::uint64_t total = product_size(eigs);
    if (k > total) {
        warn("rank " + std::to_string(k) + " exceeds product spectrum size " +
             std::to_string(total) + "; clamping");
        k = static_cast<std::size_t>(total);
    }
    std::size_t window = k * std::max<std::size_t>(opts.window_factor, 1);

    Level level;
    level.width = 1;
    for (Eigen::Index c = 0; c < eigs[0].size(); ++c) {
        level.values.push_back(eigs[0].values[c]);
        level.tuples.push_back(static_cast<std::int32_t>(c));
    }

    for (std::size_t i = 1; i < eigs.size(); ++i) {
        // Prune the previous level, then take its outer product with graph i.
        std::vector<std::uint32_t> rank = lex_ranks(level);
        std::vector<Extension> prev(level.count());
        for (std::uint32_t r = 0; r < level.count(); ++r)
            prev[r] = {level.values[r], r, 0};
        // Treat the previous level as extensions of itself to reuse prune():
        // parent_rank over r reproduces its lex order, col is constant.
        std::vector<Extension> kept = prune(std::move(prev), window, rank);
        Level retained;
        retained.width = level.width;
        for (const Extension& e : kept) {
            retained.values.push_back(e.value);
            auto t = level.tuple(e.parent);
            retained.tuples.insert(retained.tuples.end(), t.begin(), t.end());
        }

        const Eigen::VectorXd& lam = eigs[i].values;
        std::vector<Extension> gamma;
        gamma.reserve(retained.count() * static_cast<std::size_t>(lam.size()));
        for (std::uint32_t r = 0; r < retained.count(); ++r)
            for (Eigen::Index c = 0; c < lam.size(); ++c)
                gamma.push_back({retained.values[r] * lam[c], r, static_cast<std::uint32_t>(c)});
        level = extend(retained, gamma);
    }

    // Final choice over the last Gamma by score, ties to the smaller tuple.
    std::vector<std::uint32_t> order(level.count());
    std::iota(order.begin(), order.end(), 0u);
    std::vector<double> score(level.count());
    for (std::size_t r = 0; r < level.count(); ++r) score[r] = selection_score(level.values[r], alpha);
    auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        auto ta = level.tuple(a), tb = level.tuple(b);
        return std::lexicographical_compare(ta.begin(), ta.end(), tb.begin(), tb.end());
    };
    if (k < order.size()) {
        std::nth_element(order.begin(), order.begin() + k, order.end(), better);
        order.resize(k);
    }
    std::sort(order.begin(), order.end(), better);

    std::vector<IndexTuple> tuples;
    tuples.reserve(k);
    for (std::uint32_t r : order) {
        auto t = level.tuple(r);
        tuples.emplace_back(t.begin(), t.end());
    }
    return spectrum_from_tuples(eigs, alpha, std::move(tuples));
}

SelectedSpectrum spectrum_from_tuples(std::span<const EigenSystem> eigs, double alpha,
                                      std::vector<IndexTuple> tuples) {
    check_alpha(alpha);
    SelectedSpectrum spec;
    spec.alpha = alpha;
    const std::size_t k = tuples.size();
    spec.lambdas.resize(k);
    spec.factors.resize(eigs.size());
    for (std::size_t i = 0; i < eigs.size(); ++i)
        spec.factors[i].resize(eigs[i].size(), static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) {
        const IndexTuple& t = tuples[j];
        if (t.size() != eigs.size())
            throw validation_error("index tuple length does not match number of graphs");
        double lambda = 1.0;
        for (std::size_t i = 0; i < eigs.size(); ++i) {
            if (t[i] < 0 || t[i] >= eigs[i].size())
                throw validation_error("eigenvector index out of range");
            lambda *= eigs[i].values[t[i]];
            spec.factors[i].col(static_cast<Eigen::Index>(j)) = eigs[i].vectors.col(t[i]);
        }
        spec.lambdas[j] = lambda;
    }
    spec.index = std::move(tuples);
    return spec;
}

std::vector<double> filter_weights(const SelectedSpectrum& spec) {
    std::vector<double> m(spec.rank());
    for (std::size_t j = 0; j < m.size(); ++j) {
        double a = spec.alpha * spec.lambdas[j];
        m[j] = a / std::max(1.0 - a, kDenominatorEps);
    }
    return m;
}

PerturbationNorms perturbation_norms(std::span<const EigenSystem> eigs,
                                     const SelectedSpectrum& spec, double alpha,
                                     std::uint64_t cap) {
    check_alpha(alpha);
    std::uint64_t total = product_size(eigs);
    if (total > cap)
        throw validation_error("perturbation_norms: product spectrum size " +
                               std::to_string(total) + " exceeds cap " + std::to_string(cap));

    auto linear = [&](const IndexTuple& t) {
        std::uint64_t idx = 0;
        for (std::size_t i = 0; i < eigs.size(); ++i)
            idx = idx * static_cast<std::uint64_t>(eigs[i].size()) + static_cast<std::uint64_t>(t[i]);
        return idx;
    };
    std::vector<bool> selected(total, false);
    for (const auto& t : spec.index) selected[linear(t)] = true;

    PerturbationNorms out;
    double sum_sq = 0.0;
    IndexTuple t(eigs.size(), 0);
    for (std::uint64_t idx = 0; idx < total; ++idx) {
        if (!selected[idx]) {
            double lambda = 1.0;
            for (std::size_t i = 0; i < eigs.size(); ++i) lambda *= eigs[i].values[t[i]];
            double s = selection_score(lambda, alpha);
            out.spectral = std::max(out.spectral, s);
            sum_sq += s * s;
        }
        for (std::size_t i = eigs.size(); i-- > 0;) {
            if (++t[i] < eigs[i].size()) break;
            t[i] = 0;
        }
    }
    out.frobenius = std::sqrt(sum_sq);
    return out;
}

void write_spectrum(const SelectedSpectrum& spec, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot write spectrum file " + path.string());
    out << std::setprecision(17);
    out << "alpha " << spec.alpha << '\n'
        << "rank " << spec.rank() << '\n'
        << "order " << spec.order() << '\n';
    for (std::size_t j = 0; j < spec.rank(); ++j) {
        out << spec.lambdas[j];
        for (auto i : spec.index[j]) out << ' ' << i;
        out << '\n';
    }
    if (!out)
        throw io_error("failed writing spectrum file " + path.string());
}

SelectedSpectrum read_spectrum(const std::filesystem::path& path,
                               std::span<const EigenSystem> eigs) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open spectrum file " + path.string());
    std::string key;
    double alpha = 0.0;
    std::size_t k = 0, n = 0;
    if (!(in >> key >> alpha) || key != "alpha" || !(in >> key >> k) || key != "rank" ||
        !(in >> key >> n) || key != "order")
        throw validation_error(path.string() + ": bad spectrum header");
    if (n != eigs.size())
        throw validation_error(path.string() + ": order does not match number of graphs");
    std::vector<IndexTuple> tuples(k, IndexTuple(n));
    std::vector<double> stored(k);
    for (std::size_t j = 0; j < k; ++j) {
        if (!(in >> stored[j]))
            throw validation_error(path.string() + ": truncated spectrum file");
        for (auto& i : tuples[j])
            if (!(in >> i))
                throw validation_error(path.string() + ": truncated spectrum file");
    }
    SelectedSpectrum spec = spectrum_from_tuples(eigs, alpha, std::move(tuples));
    for (std::size_t j = 0; j < k; ++j)
        if (std::abs(spec.lambdas[j] - stored[j]) > 1e-12 * std::max(1.0, std::abs(stored[j])))
            throw validation_error(path.string() + ": stored eigenvalue does not match graphs");
    return spec;
}

}  // namespace ltlp
