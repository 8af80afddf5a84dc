#include "ltlp/ltlp.h"

#include "ltlp/error.hpp"
#include "ltlp/graph.hpp"
#include "ltlp/model.hpp"
#include "ltlp/oracle.hpp"
#include "ltlp/pairwise.hpp"
#include "ltlp/simbench.hpp"

#include <algorithm>
#include <iostream>
#include <memory>
#include <new>
#include <string>
#include <vector>

struct ltlp_graph {
    ltlp::Graph graph;
};

struct ltlp_tensor {
    std::shared_ptr<const ltlp::InitialTensor> tensor;
};

struct ltlp_model {
    ltlp::PropagationModel model;
};

namespace {

thread_local std::string last_error;

ltlp_status fail(ltlp_status code, const std::string& msg) {
    last_error = msg;
    return code;
}

// Runs `body`, translating exceptions into status codes.
template <typename Body>
ltlp_status guarded(Body&& body) {
    try {
        body();
        last_error.clear();
        return LTLP_OK;
    } catch (const ltlp::Error& e) {
        switch (e.kind()) {
            case ltlp::ErrorKind::validation: return fail(LTLP_ERROR_VALIDATION, e.what());
            case ltlp::ErrorKind::io: return fail(LTLP_ERROR_IO, e.what());
            case ltlp::ErrorKind::numerical: return fail(LTLP_ERROR_NUMERICAL, e.what());
        }
        return fail(LTLP_ERROR_INTERNAL, e.what());
    } catch (const std::bad_alloc&) {
        return fail(LTLP_ERROR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(LTLP_ERROR_INTERNAL, e.what());
    } catch (...) {
        return fail(LTLP_ERROR_INTERNAL, "unknown error");
    }
}

#define LTLP_REQUIRE(ptr)                                                    \
    do {                                                                     \
        if (!(ptr)) return fail(LTLP_ERROR_VALIDATION, "null argument: " #ptr); \
    } while (0)

std::vector<ltlp::Graph> collect_graphs(const ltlp_graph* const* graphs, size_t count) {
    std::vector<ltlp::Graph> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        if (!graphs[i]) throw ltlp::validation_error("null graph handle at position " + std::to_string(i));
        out.push_back(graphs[i]->graph);
    }
    return out;
}

}  // namespace

extern "C" {

const char* ltlp_version(void) { return "1.0.0"; }

const char* ltlp_last_error(void) { return last_error.c_str(); }

void ltlp_set_quiet(int quiet) {
    if (quiet)
        ltlp::set_warning_handler([](const std::string&) {});
    else
        ltlp::set_warning_handler([](const std::string& m) { std::cerr << "warning: " << m << '\n'; });
}

ltlp_status ltlp_graph_load(const char* path, ltlp_graph** out) {
    LTLP_REQUIRE(path);
    LTLP_REQUIRE(out);
    return guarded([&] { *out = new ltlp_graph{ltlp::read_graph(path)}; });
}

ltlp_status ltlp_graph_from_dense(int64_t size, const double* adjacency, ltlp_graph** out) {
    LTLP_REQUIRE(adjacency);
    LTLP_REQUIRE(out);
    return guarded([&] {
        if (size <= 0) throw ltlp::validation_error("graph size must be positive");
        using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        Eigen::MatrixXd w = Eigen::Map<const RowMajor>(adjacency, size, size);
        *out = new ltlp_graph{ltlp::Graph::from_dense(std::move(w))};
    });
}

int64_t ltlp_graph_size(const ltlp_graph* graph) { return graph ? graph->graph.size() : 0; }

void ltlp_graph_free(ltlp_graph* graph) { delete graph; }

ltlp_status ltlp_tensor_load_sparse(const char* path, ltlp_tensor** out) {
    LTLP_REQUIRE(path);
    LTLP_REQUIRE(out);
    return guarded([&] {
        *out = new ltlp_tensor{std::make_shared<const ltlp::InitialTensor>(ltlp::read_sparse_tensor(path))};
    });
}

ltlp_status ltlp_tensor_load_cp(const char* path, ltlp_tensor** out) {
    LTLP_REQUIRE(path);
    LTLP_REQUIRE(out);
    return guarded([&] {
        *out = new ltlp_tensor{std::make_shared<const ltlp::InitialTensor>(ltlp::read_cp_tensor(path))};
    });
}

ltlp_status ltlp_tensor_from_coo(size_t order, const int64_t* dims, size_t nnz,
                                 const int32_t* indices, const double* values, ltlp_tensor** out) {
    LTLP_REQUIRE(dims);
    LTLP_REQUIRE(out);
    if (nnz > 0) {
        LTLP_REQUIRE(indices);
        LTLP_REQUIRE(values);
    }
    return guarded([&] {
        ltlp::SparseTensor t(std::vector<std::int64_t>(dims, dims + order),
                             std::vector<std::int32_t>(indices, indices + nnz * order),
                             std::vector<double>(values, values + nnz));
        *out = new ltlp_tensor{std::make_shared<const ltlp::InitialTensor>(std::move(t))};
    });
}

ltlp_status ltlp_tensor_from_pairwise(const char* const* paths, size_t count, size_t order,
                                      const int64_t* sizes, int64_t rank, uint64_t seed,
                                      ltlp_tensor** out) {
    LTLP_REQUIRE(paths);
    LTLP_REQUIRE(sizes);
    LTLP_REQUIRE(out);
    return guarded([&] {
        std::vector<std::filesystem::path> files;
        for (size_t i = 0; i < count; ++i) {
            if (!paths[i]) throw ltlp::validation_error("null pairwise path");
            files.emplace_back(paths[i]);
        }
        ltlp::SymNMFOptions opts;
        opts.rank = rank;
        opts.seed = seed;
        std::vector<std::int64_t> sz(sizes, sizes + order);
        ltlp::CPTensor cp = ltlp::cp_from_pairwise(files, sz, opts);
        *out = new ltlp_tensor{std::make_shared<const ltlp::InitialTensor>(std::move(cp))};
    });
}

size_t ltlp_tensor_order(const ltlp_tensor* tensor) {
    return tensor ? ltlp::tensor_dims(*tensor->tensor).size() : 0;
}

int ltlp_tensor_is_cp(const ltlp_tensor* tensor) {
    return tensor && std::holds_alternative<ltlp::CPTensor>(*tensor->tensor) ? 1 : 0;
}

void ltlp_tensor_free(ltlp_tensor* tensor) { delete tensor; }

ltlp_status ltlp_model_build(const ltlp_graph* const* graphs, size_t count, const ltlp_tensor* y0,
                             double alpha, size_t rank, unsigned threads, ltlp_model** out) {
    LTLP_REQUIRE(graphs);
    LTLP_REQUIRE(y0);
    LTLP_REQUIRE(out);
    return guarded([&] {
        if (!(alpha > 0.0 && alpha < 1.0)) throw ltlp::validation_error("alpha must lie in (0, 1)");
        if (rank < 1) throw ltlp::validation_error("rank must be at least 1");
        std::vector<ltlp::Graph> gs = collect_graphs(graphs, count);
        ltlp::BuildOptions opts;
        opts.threads = threads;
        *out = new ltlp_model{ltlp::build_model(std::span<const ltlp::Graph>(gs), y0->tensor, alpha, rank, opts)};
    });
}

size_t ltlp_model_rank(const ltlp_model* model) { return model ? model->model.rank() : 0; }

size_t ltlp_model_order(const ltlp_model* model) { return model ? model->model.order() : 0; }

ltlp_status ltlp_model_timings(const ltlp_model* model, ltlp_timings* out) {
    LTLP_REQUIRE(model);
    LTLP_REQUIRE(out);
    const auto& t = model->model.timings;
    *out = {t.eigen_seconds, t.select_seconds, t.compress_seconds};
    return LTLP_OK;
}

ltlp_status ltlp_model_score(const ltlp_model* model, const int32_t* index, size_t order, double* out) {
    LTLP_REQUIRE(model);
    LTLP_REQUIRE(index);
    LTLP_REQUIRE(out);
    return guarded([&] { *out = model->model.score(std::span<const std::int32_t>(index, order)); });
}

ltlp_status ltlp_model_predict(const ltlp_model* model, const int32_t* queries, size_t count,
                               unsigned threads, int32_t* out_indices, double* out_scores,
                               size_t* out_rows) {
    LTLP_REQUIRE(model);
    LTLP_REQUIRE(out_rows);
    if (count > 0) {
        LTLP_REQUIRE(queries);
        LTLP_REQUIRE(out_indices);
        LTLP_REQUIRE(out_scores);
    }
    return guarded([&] {
        const size_t order = model->model.order();
        std::vector<std::vector<std::int32_t>> qs;
        qs.reserve(count);
        for (size_t q = 0; q < count; ++q) qs.emplace_back(queries + q * order, queries + (q + 1) * order);
        ltlp::ScoreTable table = ltlp::predict(model->model, qs, threads);
        for (size_t r = 0; r < table.size(); ++r) {
            std::copy(table[r].index.begin(), table[r].index.end(), out_indices + r * order);
            out_scores[r] = table[r].score;
        }
        *out_rows = table.size();
    });
}

ltlp_status ltlp_model_predict_file(const ltlp_model* model, const char* query_path,
                                    const char* out_path, unsigned threads, size_t* out_rows) {
    LTLP_REQUIRE(model);
    LTLP_REQUIRE(query_path);
    LTLP_REQUIRE(out_path);
    return guarded([&] {
        auto queries = ltlp::read_queries(query_path, model->model.order());
        ltlp::ScoreTable table = ltlp::predict(model->model, queries, threads);
        ltlp::write_score_table(table, out_path);
        if (out_rows) *out_rows = table.size();
    });
}

ltlp_status ltlp_model_write_spectrum(const ltlp_model* model, const char* path) {
    LTLP_REQUIRE(model);
    LTLP_REQUIRE(path);
    return guarded([&] { ltlp::write_spectrum(model->model.spectrum(), path); });
}

void ltlp_model_free(ltlp_model* model) { delete model; }

void ltlp_sim_config_default(ltlp_sim_config* cfg) {
    if (!cfg) return;
    ltlp::sim::SimConfig d;
    *cfg = {d.size, d.graphs, d.density, d.rewire, d.alpha, d.rank, d.seed, d.threads};
}

ltlp_status ltlp_simulate(const ltlp_sim_config* cfg, ltlp_sim_report* out) {
    LTLP_REQUIRE(cfg);
    LTLP_REQUIRE(out);
    return guarded([&] {
        ltlp::sim::SimConfig c{cfg->size, cfg->graphs, cfg->density, cfg->rewire,
                               cfg->alpha, cfg->rank, cfg->seed, cfg->threads};
        ltlp::sim::SimReport r = ltlp::sim::run_simulation(c);
        *out = {r.auc, r.map, r.seconds, r.rank};
    });
}

ltlp_status ltlp_oracle_check(const ltlp_graph* const* graphs, size_t count, const ltlp_tensor* y0,
                              double alpha, size_t rank, ltlp_oracle_report* out) {
    LTLP_REQUIRE(graphs);
    LTLP_REQUIRE(y0);
    LTLP_REQUIRE(out);
    return guarded([&] {
        std::vector<ltlp::Graph> gs = collect_graphs(graphs, count);
        ltlp::oracle::CheckReport r = ltlp::oracle::check_instance(gs, *y0->tensor, alpha, rank);
        *out = {r.rank,
                r.product_size,
                r.full_rank_deviation,
                r.closed_form_gap,
                r.lowrank_deviation,
                r.error_bound,
                r.perturbation.spectral,
                r.perturbation.frobenius,
                r.best_rank_k.spectral,
                r.best_rank_k.frobenius,
                r.selection_gap,
                r.rank_k_comparison_applicable ? 1 : 0,
                r.selection_by_subsets ? 1 : 0,
                r.full_rank_pass ? 1 : 0,
                r.rank_k_comparison_pass ? 1 : 0,
                r.selection_pass ? 1 : 0};
    });
}

}  // extern "C"
