#pragma once

#include "ltlp/graph.hpp"
#include "ltlp/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ltlp::sim {

struct SimConfig {
    std::int64_t size = 100;   // vertices per graph
    std::size_t graphs = 5;
    double density = 0.1;
    double rewire = 0.1;       // fraction of ancestor edges rewired per graph
    double alpha = 0.1;
    std::size_t rank = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

void validate(const SimConfig& cfg);

/// An Erdos-Renyi ancestor at the given density, then per graph
/// ceil(rewire * |E|) rewirings (drop a uniformly chosen edge, add a uniformly
/// chosen non-edge). Edge weights are 1; no self-loops.
std::vector<Graph> generate_family(const SimConfig& cfg);

struct LabeledTestSet {
    std::vector<std::vector<std::int32_t>> tuples;
    std::vector<int> labels;  // 1 = held-out diagonal, 0 = random off-diagonal
};

struct SimInput {
    SparseTensor y0;
    LabeledTestSet test;
    std::vector<std::vector<std::int32_t>> training;
};

/// Half of the diagonal tuples (i, .., i) get value 1 (training); the other
/// half are positives and an equal number of off-diagonal tuples are
/// negatives, all test tuples stored in Y0 with value 0.9.
SimInput build_sim_input(const SimConfig& cfg);

/// Mann-Whitney AUC; tied scores count one half.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Average precision over a single ranking by descending score. Equal scores
/// keep input order.
double mean_avg_precision(std::span<const double> scores, std::span<const int> labels);

struct SimReport {
    double auc = 0.0;
    double map = 0.0;
    double seconds = 0.0;
    std::size_t rank = 0;  // after clamping
};

/// generate_family + build_sim_input + LowrankTLP + evaluation on the test set.
SimReport run_simulation(const SimConfig& cfg);

}  // namespace ltlp::sim
