#include "ltlp/simbench.hpp"

#include "ltlp/error.hpp"
#include "ltlp/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>

namespace ltlp::sim {

namespace {

using EdgeKey = std::pair<std::int32_t, std::int32_t>;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(index)};
    return std::mt19937_64(seq);
}

Graph to_graph(std::int64_t size, const std::vector<EdgeKey>& edges) {
    std::vector<Edge> list;
    list.reserve(edges.size());
    for (auto [a, b] : edges) list.push_back({a, b, 1.0});
    return Graph::from_edges(size, list);
}

}  // namespace

void validate(const SimConfig& cfg) {
    if (cfg.size < 2) throw validation_error("simulation graph size must be at least 2");
    if (cfg.graphs < 1) throw validation_error("simulation needs at least one graph");
    if (!(cfg.density > 0.0 && cfg.density <= 1.0))
        throw validation_error("density must lie in (0, 1]");
    if (!(cfg.rewire >= 0.0 && cfg.rewire <= 1.0))
        throw validation_error("rewire fraction must lie in [0, 1]");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
        throw validation_error("alpha must lie in (0, 1)");
    if (cfg.rank < 1) throw validation_error("rank must be at least 1");
    if (cfg.size > INT32_MAX) throw validation_error("graph size too large");
}

std::vector<Graph> generate_family(const SimConfig& cfg) {
    validate(cfg);
    const auto n = static_cast<std::int32_t>(cfg.size);
    const std::int64_t pairs = static_cast<std::int64_t>(n) * (n - 1) / 2;

    auto rng = stream(cfg.seed, 0, 0);
    std::bernoulli_distribution coin(cfg.density);
    std::vector<EdgeKey> ancestor;
    for (std::int32_t a = 0; a < n; ++a)
        for (std::int32_t b = a + 1; b < n; ++b)
            if (coin(rng)) ancestor.emplace_back(a, b);

    const auto swaps = static_cast<std::int64_t>(
        std::ceil(cfg.rewire * static_cast<double>(ancestor.size()) - 1e-9));
    if (swaps > 0 && static_cast<std::int64_t>(ancestor.size()) >= pairs)
        throw validation_error("graph is complete; no non-edges available for rewiring");

    std::vector<Graph> family;
    family.reserve(cfg.graphs);
    for (std::size_t g = 0; g < cfg.graphs; ++g) {
        auto grng = stream(cfg.seed, 1, g);
        std::vector<EdgeKey> edges = ancestor;
        std::set<EdgeKey> present(edges.begin(), edges.end());
        std::uniform_int_distribution<std::int32_t> vertex(0, n - 1);
        for (std::int64_t s = 0; s < swaps; ++s) {
            std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
            std::size_t victim = pick(grng);
            present.erase(edges[victim]);
            EdgeKey added;
            do {
                std::int32_t a = vertex(grng), b = vertex(grng);
                added = {std::min(a, b), std::max(a, b)};
            } while (added.first == added.second || present.count(added) ||
                     added == edges[victim]);
            present.insert(added);
            edges[victim] = added;
        }
        family.push_back(to_graph(cfg.size, edges));
    }
    return family;
}

SimInput build_sim_input(const SimConfig& cfg) {
    validate(cfg);
    const auto n = static_cast<std::int32_t>(cfg.size);
    const std::size_t order = cfg.graphs;
    if (order < 2)
        throw validation_error("off-diagonal negatives need at least two graphs");
    auto rng = stream(cfg.seed, 2, 0);

    std::vector<std::int32_t> diag(static_cast<std::size_t>(n));
    std::iota(diag.begin(), diag.end(), 0);
    std::shuffle(diag.begin(), diag.end(), rng);
    const std::size_t n_train = static_cast<std::size_t>(n) / 2;

    SimInput in;
    std::vector<std::int32_t> idx;
    std::vector<double> vals;
    std::set<std::vector<std::int32_t>> used;
    auto add = [&](std::vector<std::int32_t> t, double value) {
        idx.insert(idx.end(), t.begin(), t.end());
        vals.push_back(value);
        used.insert(t);
    };

    for (std::size_t r = 0; r < diag.size(); ++r) {
        std::vector<std::int32_t> t(order, diag[r]);
        if (r < n_train) {
            in.training.push_back(t);
            add(std::move(t), 1.0);
        } else {
            in.test.tuples.push_back(t);
            in.test.labels.push_back(1);
            add(std::move(t), 0.9);
        }
    }
    const std::size_t n_neg = diag.size() - n_train;
    std::uniform_int_distribution<std::int32_t> vertex(0, n - 1);
    for (std::size_t made = 0; made < n_neg;) {
        std::vector<std::int32_t> t(order);
        for (auto& i : t) i = vertex(rng);
        bool diagonal = std::all_of(t.begin(), t.end(), [&](std::int32_t i) { return i == t[0]; });
        if (diagonal || used.count(t)) continue;
        in.test.tuples.push_back(t);
        in.test.labels.push_back(0);
        add(std::move(t), 0.9);
        ++made;
    }
    // Interleave positives and negatives so tied scores carry no label order.
    std::vector<std::size_t> perm(in.test.tuples.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    LabeledTestSet shuffled;
    for (auto p : perm) {
        shuffled.tuples.push_back(std::move(in.test.tuples[p]));
        shuffled.labels.push_back(in.test.labels[p]);
    }
    in.test = std::move(shuffled);
    in.y0 = SparseTensor(std::vector<std::int64_t>(order, cfg.size), std::move(idx), std::move(vals));
    return in;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw validation_error("auc: scores and labels differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Rank-sum form with average ranks over tied blocks.
    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]]) {
                pos_rank_sum += avg_rank;
                ++n_pos;
            } else {
                ++n_neg;
            }
        }
        i = j;
    }
    if (n_pos == 0 || n_neg == 0)
        throw validation_error("auc: need at least one positive and one negative");
    double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double mean_avg_precision(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw validation_error("mean_avg_precision: scores and labels differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (labels[order[r]]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    }
    if (hits == 0)
        throw validation_error("mean_avg_precision: no positives");
    return sum / static_cast<double>(hits);
}

SimReport run_simulation(const SimConfig& cfg) {
    validate(cfg);
    auto start = std::chrono::steady_clock::now();
    std::vector<Graph> graphs = generate_family(cfg);
    SimInput input = build_sim_input(cfg);
    auto y0 = std::make_shared<const InitialTensor>(std::move(input.y0));

    BuildOptions opts;
    opts.threads = cfg.threads;
    PropagationModel model = build_model(std::span<const Graph>(graphs), y0, cfg.alpha, cfg.rank, opts);

    std::vector<double> scores;
    scores.reserve(input.test.tuples.size());
    for (const auto& t : input.test.tuples) scores.push_back(model.score(t));

    SimReport rep;
    rep.auc = auc(scores, input.test.labels);
    rep.map = mean_avg_precision(scores, input.test.labels);
    rep.rank = model.rank();
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

}  // namespace ltlp::sim
