// Command-line front end. Talks to the library only through the C API.

#include "ltlp/ltlp.h"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct GraphDeleter {
    void operator()(ltlp_graph* g) const { ltlp_graph_free(g); }
};
struct TensorDeleter {
    void operator()(ltlp_tensor* t) const { ltlp_tensor_free(t); }
};
struct ModelDeleter {
    void operator()(ltlp_model* m) const { ltlp_model_free(m); }
};
using GraphPtr = std::unique_ptr<ltlp_graph, GraphDeleter>;
using TensorPtr = std::unique_ptr<ltlp_tensor, TensorDeleter>;
using ModelPtr = std::unique_ptr<ltlp_model, ModelDeleter>;

// Carries a status code up to main().
struct Failure {
    int code;
    std::string message;
};

void check(ltlp_status status, const std::string& context) {
    if (status != LTLP_OK) throw Failure{status, context + ": " + ltlp_last_error()};
}

void validation(const std::string& message) { throw Failure{LTLP_ERROR_VALIDATION, message}; }

class Stopwatch {
public:
    double lap() {
        auto now = std::chrono::steady_clock::now();
        double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void log_stage(const char* stage, double seconds) {
    std::fprintf(stderr, "[ltlp] %-9s %.3f s\n", stage, seconds);
}

struct InputOptions {
    std::vector<std::string> graphs;
    std::string tensor;
    std::vector<std::string> pairwise;
    long long cp_rank = 0;
    double alpha = 0.1;
    std::size_t rank = 0;
    unsigned long long seed = 1;
};

void add_input_options(CLI::App* cmd, InputOptions& in) {
    cmd->add_option("--graphs", in.graphs, "Graph edge-list files, in mode order")->required();
    auto* tensor = cmd->add_option("--tensor", in.tensor, "Sparse initial tensor file");
    auto* pairwise = cmd->add_option("--pairwise", in.pairwise, "Pairwise similarity files (CP input)");
    tensor->excludes(pairwise);
    pairwise->excludes(tensor);
    cmd->add_option("--cp-rank", in.cp_rank, "Rank of the symNMF factorization for --pairwise");
    cmd->add_option("--alpha", in.alpha, "Propagation weight in (0, 1)")->capture_default_str();
    cmd->add_option("--rank", in.rank, "Number of selected product eigenpairs")->required();
    cmd->add_option("--seed", in.seed, "Seed for all randomness")->capture_default_str();
}

void validate_inputs(const InputOptions& in) {
    if (!(in.alpha > 0.0 && in.alpha < 1.0)) validation("--alpha must lie in (0, 1)");
    if (in.rank < 1) validation("--rank must be at least 1");
    if (in.tensor.empty() && in.pairwise.empty()) validation("one of --tensor or --pairwise is required");
    if (!in.pairwise.empty() && in.cp_rank < 1) validation("--pairwise needs --cp-rank >= 1");
}

std::vector<GraphPtr> load_graphs(const InputOptions& in) {
    std::vector<GraphPtr> graphs;
    for (const auto& path : in.graphs) {
        ltlp_graph* g = nullptr;
        check(ltlp_graph_load(path.c_str(), &g), "loading " + path);
        graphs.emplace_back(g);
    }
    return graphs;
}

TensorPtr load_tensor(const InputOptions& in, const std::vector<GraphPtr>& graphs) {
    ltlp_tensor* t = nullptr;
    if (!in.tensor.empty()) {
        check(ltlp_tensor_load_sparse(in.tensor.c_str(), &t), "loading " + in.tensor);
    } else {
        std::vector<const char*> paths;
        for (const auto& p : in.pairwise) paths.push_back(p.c_str());
        std::vector<int64_t> sizes;
        for (const auto& g : graphs) sizes.push_back(ltlp_graph_size(g.get()));
        check(ltlp_tensor_from_pairwise(paths.data(), paths.size(), sizes.size(), sizes.data(),
                                        in.cp_rank, in.seed, &t),
              "building CP tensor from pairwise files");
    }
    return TensorPtr(t);
}

std::vector<const ltlp_graph*> raw(const std::vector<GraphPtr>& graphs) {
    std::vector<const ltlp_graph*> out;
    for (const auto& g : graphs) out.push_back(g.get());
    return out;
}

int cmd_run(const InputOptions& in, const std::string& queries, const std::string& out,
            const std::string& spectrum_out, unsigned threads) {
    validate_inputs(in);
    Stopwatch clock;
    auto graphs = load_graphs(in);
    auto tensor = load_tensor(in, graphs);
    log_stage("load", clock.lap());

    ltlp_model* m = nullptr;
    auto handles = raw(graphs);
    check(ltlp_model_build(handles.data(), handles.size(), tensor.get(), in.alpha, in.rank, threads, &m),
          "building model");
    ModelPtr model(m);
    clock.lap();
    ltlp_timings t{};
    check(ltlp_model_timings(model.get(), &t), "reading timings");
    log_stage("eigen", t.eigen_seconds);
    log_stage("select", t.select_seconds);
    log_stage("compress", t.compress_seconds);

    if (!spectrum_out.empty())
        check(ltlp_model_write_spectrum(model.get(), spectrum_out.c_str()), "writing " + spectrum_out);

    size_t rows = 0;
    check(ltlp_model_predict_file(model.get(), queries.c_str(), out.c_str(), threads, &rows),
          "scoring queries");
    log_stage("predict", clock.lap());
    std::fprintf(stderr, "[ltlp] rank %zu, %zu rows written to %s\n", ltlp_model_rank(model.get()),
                 rows, out.c_str());
    return 0;
}

struct SimOptions {
    ltlp_sim_config cfg{};
    std::vector<std::size_t> sweep;
    std::string csv;
};

void print_report(std::ostream& os, const ltlp_sim_config& cfg, const ltlp_sim_report& r) {
    os << "size=" << cfg.size << '\n'
       << "graphs=" << cfg.graphs << '\n'
       << "density=" << cfg.density << '\n'
       << "rewire=" << cfg.rewire << '\n'
       << "alpha=" << cfg.alpha << '\n'
       << "rank=" << r.rank << '\n'
       << "seed=" << cfg.seed << '\n'
       << "auc=" << r.auc << '\n'
       << "map=" << r.map << '\n'
       << "seconds=" << r.seconds << '\n';
}

int cmd_simulate(SimOptions& opt) {
    std::cout.precision(10);
    if (opt.sweep.empty()) {
        ltlp_sim_report r{};
        check(ltlp_simulate(&opt.cfg, &r), "simulation");
        print_report(std::cout, opt.cfg, r);
        return 0;
    }

    std::ostringstream csv;
    csv.precision(10);
    csv << "k,auc,map,seconds\n";
    for (std::size_t k : opt.sweep) {
        ltlp_sim_config cfg = opt.cfg;
        cfg.rank = k;
        ltlp_sim_report r{};
        check(ltlp_simulate(&cfg, &r), "simulation at rank " + std::to_string(k));
        csv << r.rank << ',' << r.auc << ',' << r.map << ',' << r.seconds << '\n';
    }
    if (opt.csv.empty()) {
        std::cout << csv.str();
    } else {
        std::string tmp = opt.csv + ".tmp";
        {
            std::ofstream f(tmp);
            if (!(f << csv.str())) throw Failure{LTLP_ERROR_IO, "cannot write " + tmp};
        }
        if (std::rename(tmp.c_str(), opt.csv.c_str()) != 0)
            throw Failure{LTLP_ERROR_IO, "cannot move CSV into place at " + opt.csv};
    }
    return 0;
}

int cmd_oracle_check(const InputOptions& in) {
    validate_inputs(in);
    auto graphs = load_graphs(in);
    auto tensor = load_tensor(in, graphs);
    auto handles = raw(graphs);
    ltlp_oracle_report r{};
    check(ltlp_oracle_check(handles.data(), handles.size(), tensor.get(), in.alpha, in.rank, &r),
          "oracle check");

    auto verdict = [](int ok) { return ok ? "PASS" : "FAIL"; };
    std::printf("product_size=%llu\nrank=%zu\n", static_cast<unsigned long long>(r.product_size), r.rank);
    std::printf("full_rank_max_deviation=%.3e %s\n", r.full_rank_deviation, verdict(r.full_rank_pass));
    std::printf("closed_form_path_gap=%.3e\n", r.closed_form_gap);
    std::printf("lowrank_max_deviation=%.3e (bound %.3e)\n", r.lowrank_deviation, r.error_bound);
    std::printf("perturbation_spectral=%.6e\nperturbation_frobenius=%.6e\n", r.perturbation_spectral,
                r.perturbation_frobenius);
    if (r.rank_k_comparison_applicable)
        std::printf("best_rank_k_spectral=%.6e\nbest_rank_k_frobenius=%.6e\n", r.best_rank_k_spectral,
                    r.best_rank_k_frobenius);
    std::printf("lowrank_vs_best_rank_k %s%s\n", verdict(r.rank_k_comparison_pass),
                r.rank_k_comparison_applicable ? "" : " (rank covers the full spectrum)");
    std::printf("selection_gap=%.3e %s (%s)\n", r.selection_gap, verdict(r.selection_pass),
                r.selection_by_subsets ? "all subsets" : "full spectrum sort");
    bool ok = r.full_rank_pass && r.rank_k_comparison_pass && r.selection_pass;
    std::printf("result=%s\n", ok ? "PASS" : "FAIL");
    return ok ? 0 : LTLP_ERROR_NUMERICAL;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-rank label propagation on tensor product graphs"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Suppress warnings");

    InputOptions run_in;
    std::string queries, out, spectrum_out;
    unsigned threads = 0;
    auto* run = app.add_subcommand("run", "Score queried tuples");
    add_input_options(run, run_in);
    run->add_option("--queries", queries, "Query file, one tuple per line")->required();
    run->add_option("--out", out, "Output TSV path")->required();
    run->add_option("--spectrum-out", spectrum_out, "Optional selected-spectrum sidecar path");
    run->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();

    SimOptions sim;
    ltlp_sim_config_default(&sim.cfg);
    auto* simulate = app.add_subcommand("simulate", "Synthetic alignment benchmark");
    simulate->add_option("--size", sim.cfg.size, "Vertices per graph")->capture_default_str();
    simulate->add_option("--num-graphs", sim.cfg.graphs, "Number of graphs")->capture_default_str();
    simulate->add_option("--density", sim.cfg.density, "Ancestor edge density")->capture_default_str();
    simulate->add_option("--rewire", sim.cfg.rewire, "Fraction of edges rewired per graph")->capture_default_str();
    simulate->add_option("--alpha", sim.cfg.alpha, "Propagation weight in (0, 1)")->capture_default_str();
    simulate->add_option("--rank", sim.cfg.rank, "Number of selected product eigenpairs")->capture_default_str();
    simulate->add_option("--sweep", sim.sweep, "Ranks to sweep; emits one CSV row per rank")->delimiter(',');
    simulate->add_option("--csv", sim.csv, "Write the sweep CSV here instead of stdout");
    simulate->add_option("--seed", sim.cfg.seed, "Seed for all randomness")->capture_default_str();
    simulate->add_option("--threads", sim.cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();

    InputOptions check_in;
    auto* oracle = app.add_subcommand("oracle-check", "Compare against dense reference computations");
    add_input_options(oracle, check_in);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : LTLP_ERROR_VALIDATION;
    }
    ltlp_set_quiet(quiet ? 1 : 0);

    try {
        if (*run) return cmd_run(run_in, queries, out, spectrum_out, threads);
        if (*simulate) return cmd_simulate(sim);
        if (*oracle) return cmd_oracle_check(check_in);
    } catch (const Failure& f) {
        std::fprintf(stderr, "error: %s\n", f.message.c_str());
        return f.code;
    }
    return LTLP_ERROR_INTERNAL;
}
