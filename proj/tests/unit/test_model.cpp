#include <doctest.h>

#include "fixtures.hpp"
#include "ltlp/error.hpp"
#include "ltlp/model.hpp"

using namespace ltlp;

namespace {

double max_deviation(const PropagationModel& m, const Eigen::VectorXd& exact) {
    double worst = 0;
    for (const auto& t : fx::all_tuples(m.dims()))
        worst = std::max(worst, std::abs(m.score(t) - exact[fx::linear(m.dims(), t)]));
    return worst;
}

}  // namespace

TEST_CASE("full rank reproduces the dense closed form") {
    fx::Rng rng(1);
    for (const auto& sizes : std::vector<std::vector<std::int64_t>>{{4, 5, 6}, {3, 6, 2}, {6, 6, 6}}) {
        auto gs = fx::random_graphs(sizes, rng);
        auto y0 = fx::share(fx::random_sparse(sizes, 20, rng));
        const std::size_t n = static_cast<std::size_t>(fx::product(sizes));
        for (double alpha : {0.1, 0.5, 0.9}) {
            auto model = build_model(std::span<const Graph>(gs), y0, alpha, n);
            CHECK(max_deviation(model, fx::closed_form(gs, *y0, alpha)) <= 1e-8);
        }
    }
}

TEST_CASE("single graph reduces to classical label propagation") {
    fx::Rng rng(2);
    auto gs = fx::random_graphs({9}, rng);
    auto y0 = fx::share(fx::random_sparse({9}, 4, rng));
    auto model = build_model(std::span<const Graph>(gs), y0, 0.6, 9);
    Eigen::MatrixXd s = fx::normalized(gs[0].adjacency());
    Eigen::VectorXd exact = 0.4 * (Eigen::MatrixXd::Identity(9, 9) - 0.6 * s).inverse() * fx::dense_vec(*y0);
    for (std::int32_t i = 0; i < 9; ++i) CHECK(std::abs(model.score(fx::Tuple{i}) - exact[i]) <= 1e-10);
}

TEST_CASE("scores do not depend on eigenvector signs") {
    fx::Rng rng(3);
    auto gs = fx::random_graphs({4, 5, 3}, rng);
    auto eigs = fx::decompose(gs);
    auto y0 = fx::share(fx::random_sparse({4, 5, 3}, 15, rng));
    auto flipped = eigs;
    for (auto& e : flipped)
        for (Eigen::Index j = 0; j < e.vectors.cols(); j += 2) e.vectors.col(j) *= -1.0;
    for (std::size_t k : {5u, 23u, 60u}) {
        auto a = build_model(std::span<const EigenSystem>(eigs), y0, 0.5, k);
        auto b = build_model(std::span<const EigenSystem>(flipped), y0, 0.5, k);
        for (const auto& t : fx::all_tuples(a.dims())) CHECK(std::abs(a.score(t) - b.score(t)) <= 1e-12);
    }
}

TEST_CASE("scores are linear in the initial tensor") {
    fx::Rng rng(4);
    std::vector<std::int64_t> dims{4, 3, 5};
    auto gs = fx::random_graphs(dims, rng);
    auto eigs = fx::decompose(gs);
    auto y0 = fx::random_sparse(dims, 10, rng);
    auto y1 = fx::random_sparse(dims, 10, rng);
    const double a = 2.5, b = -0.75;
    Eigen::VectorXd combo = a * fx::dense_vec(y0) + b * fx::dense_vec(y1);
    std::vector<std::int32_t> idx;
    std::vector<double> vals;
    for (const auto& t : fx::all_tuples(dims)) {
        double x = combo[fx::linear(dims, t)];
        if (x == 0.0) continue;
        idx.insert(idx.end(), t.begin(), t.end());
        vals.push_back(x);
    }
    auto m0 = build_model(std::span<const EigenSystem>(eigs), fx::share(y0), 0.4, 12);
    auto m1 = build_model(std::span<const EigenSystem>(eigs), fx::share(y1), 0.4, 12);
    auto mc = build_model(std::span<const EigenSystem>(eigs), fx::share(SparseTensor(dims, idx, vals)), 0.4, 12);
    for (const auto& t : fx::all_tuples(dims))
        CHECK(std::abs(mc.score(t) - (a * m0.score(t) + b * m1.score(t))) <= 1e-12);
}

TEST_CASE("low-rank error stays within the perturbation bound") {
    fx::Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::int64_t> dims{3, 4, 2 + trial % 3};
        auto gs = fx::random_graphs(dims, rng);
        auto eigs = fx::decompose(gs);
        auto y0 = fx::share(fx::random_sparse(dims, 8, rng));
        double alpha = 0.3 + 0.06 * trial;
        Eigen::VectorXd exact = fx::closed_form(gs, *y0, alpha);
        double ynorm = fx::dense_vec(*y0).norm();
        for (std::size_t k : {1u, 4u, 10u}) {
            auto model = build_model(std::span<const EigenSystem>(eigs), y0, alpha, k);
            auto p = perturbation_norms(eigs, model.spectrum(), alpha);
            double bound = (1 - alpha) * p.spectral * ynorm;
            CHECK(max_deviation(model, exact) <= bound + 1e-12);
        }
    }
}

TEST_CASE("CP and sparse inputs agree through every compression path") {
    fx::Rng rng(6);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<std::int64_t> dims{3, 4, 3};
        auto eigs = fx::decompose(fx::random_graphs(dims, rng));
        auto cp = fx::share(fx::random_cp(dims, 3, rng));
        auto sp = fx::share(fx::to_sparse(*cp));
        BuildOptions per;
        per.path = CompressPath::per_column;
        auto mc = build_model(std::span<const EigenSystem>(eigs), cp, 0.5, 15);
        auto mm = build_model(std::span<const EigenSystem>(eigs), sp, 0.5, 15);
        auto mp = build_model(std::span<const EigenSystem>(eigs), sp, 0.5, 15, per);
        CHECK((mc.compressed() - mm.compressed()).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((mm.compressed() - mp.compressed()).cwiseAbs().maxCoeff() <= 1e-12);
        for (const auto& t : fx::all_tuples(dims)) {
            CHECK(std::abs(mc.score(t) - mm.score(t)) <= 1e-10);
            CHECK(std::abs(mm.score(t) - mp.score(t)) <= 1e-10);
        }
    }
}

TEST_CASE("CP factors equal to the first selected eigenvectors compress to e1") {
    fx::Rng rng(7);
    auto eigs = fx::decompose(fx::random_graphs({4, 5}, rng));
    auto spec = select_eigenpairs(eigs, 0.5, 6);
    std::vector<Eigen::MatrixXd> f;
    for (const auto& q : spec.factors) f.push_back(q.col(0));
    Eigen::VectorXd v = compress(CPTensor(f), spec);
    CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v.tail(5).cwiseAbs().maxCoeff() <= 1e-12);

    CHECK(compress(SparseTensor({4, 5}, {}, {}), spec).norm() == 0.0);
}

TEST_CASE("vanishing alpha and zero filtered vector give the scaled initial tensor") {
    fx::Rng rng(8);
    std::vector<std::int64_t> dims{3, 4};
    auto gs = fx::random_graphs(dims, rng);
    auto y0 = fx::share(fx::random_sparse(dims, 6, rng));
    auto tiny = build_model(std::span<const Graph>(gs), y0, 1e-8, 12);
    auto spec = tiny.spectrum();
    PropagationModel zero(spec, y0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.rank())));
    Eigen::VectorXd y = fx::dense_vec(*y0);
    for (const auto& t : fx::all_tuples(dims)) {
        CHECK(std::abs(tiny.score(t) - (1 - 1e-8) * y[fx::linear(dims, t)]) <= 1e-7);
        CHECK(zero.score(t) == (1 - 1e-8) * y[fx::linear(dims, t)]);
    }
}

TEST_CASE("filtered vector is the compressed vector times the filter") {
    fx::Rng rng(9);
    auto gs = fx::random_graphs({5, 4}, rng);
    auto model = build_model(std::span<const Graph>(gs), fx::share(fx::random_sparse({5, 4}, 7, rng)), 0.5, 8);
    auto m = filter_weights(model.spectrum());
    for (Eigen::Index j = 0; j < model.compressed().size(); ++j)
        CHECK(model.filtered()[j] == model.compressed()[j] * m[static_cast<std::size_t>(j)]);
}

TEST_CASE("results do not depend on thread count") {
    fx::Rng rng(10);
    std::vector<std::int64_t> dims{8, 7, 6};
    auto gs = fx::random_graphs(dims, rng);
    auto y0 = fx::share(fx::random_sparse(dims, 60, rng));
    BuildOptions one, many;
    one.threads = 1;
    many.threads = 4;
    auto a = build_model(std::span<const Graph>(gs), y0, 0.5, 100, one);
    auto b = build_model(std::span<const Graph>(gs), y0, 0.5, 100, many);
    CHECK(a.spectrum().index == b.spectrum().index);
    CHECK(a.compressed() == b.compressed());
    auto queries = fx::all_tuples(dims);
    auto ta = predict(a, queries, 1), tb = predict(b, queries, 4);
    REQUIRE(ta.size() == tb.size());
    for (std::size_t r = 0; r < ta.size(); ++r) {
        CHECK(ta[r].index == tb[r].index);
        CHECK(ta[r].score == tb[r].score);
    }
}

TEST_CASE("predict deduplicates, sorts and matches per-tuple scores") {
    fx::Rng rng(11);
    std::vector<std::int64_t> dims{3, 4};
    auto gs = fx::random_graphs(dims, rng);
    auto model = build_model(std::span<const Graph>(gs), fx::share(fx::random_sparse(dims, 5, rng)), 0.5, 6);

    CHECK(predict(model, std::vector<std::vector<std::int32_t>>{}).empty());

    std::vector<std::vector<std::int32_t>> q{{1, 2}, {0, 0}, {1, 2}, {2, 3}, {0, 0}};
    auto table = predict(model, q);
    REQUIRE(table.size() == 3);
    for (std::size_t r = 0; r < table.size(); ++r) {
        CHECK(table[r].score == model.score(table[r].index));
        if (r > 0) CHECK(table[r - 1].score >= table[r].score);
    }
}

TEST_CASE("equal scores are listed in tuple order") {
    std::vector<Graph> gs{Graph::from_dense(Eigen::MatrixXd::Ones(2, 2)), Graph::from_dense(Eigen::MatrixXd::Ones(2, 2))};
    auto y0 = fx::share(SparseTensor({2, 2}, {}, {}));
    auto model = build_model(std::span<const Graph>(gs), y0, 0.5, 4);
    auto table = predict(model, std::vector<std::vector<std::int32_t>>{{1, 1}, {0, 1}, {1, 0}, {0, 0}});
    REQUIRE(table.size() == 4);
    CHECK(table[0].index == fx::Tuple{0, 0});
    CHECK(table[1].index == fx::Tuple{0, 1});
    CHECK(table[2].index == fx::Tuple{1, 0});
    CHECK(table[3].index == fx::Tuple{1, 1});
}

TEST_CASE("invalid model inputs") {
    fx::Rng rng(12);
    auto gs = fx::random_graphs({3, 4}, rng);
    auto y0 = fx::share(fx::random_sparse({3, 4}, 3, rng));
    auto wrong = fx::share(fx::random_sparse({4, 3}, 3, rng));
    CHECK_THROWS_AS(build_model(std::span<const Graph>(gs), y0, 1.2, 3), Error);
    CHECK_THROWS_AS(build_model(std::span<const Graph>(gs), y0, 0.0, 3), Error);
    CHECK_THROWS_AS(build_model(std::span<const Graph>(gs), wrong, 0.5, 3), Error);
    CHECK_THROWS_AS(build_model(std::span<const Graph>(gs), y0, 0.5, 0), Error);
    auto model = build_model(std::span<const Graph>(gs), y0, 0.5, 3);
    CHECK_THROWS_AS(model.score(fx::Tuple{0}), Error);
    CHECK_THROWS_AS(model.score(fx::Tuple{3, 0}), Error);
}

TEST_CASE("score table file format and atomic write") {
    fx::TempDir dir;
    ScoreTable table{{{1, 2}, 0.5}, {{0, 0}, -0.25}};
    write_score_table(table, dir / "out.tsv");
    CHECK(fx::slurp(dir / "out.tsv") == "1\t2\t0.5\n0\t0\t-0.25\n");
    for (const auto& entry : std::filesystem::directory_iterator(dir.path))
        CHECK(entry.path().filename() == "out.tsv");

    CHECK_THROWS_AS(write_score_table(table, dir / "no_such_dir" / "out.tsv"), Error);
    CHECK(!std::filesystem::exists(dir / "no_such_dir"));
}

TEST_CASE("query file parsing") {
    fx::TempDir dir;
    fx::spit(dir / "q.txt", "# header\n0 1\n\n2 3\n");
    auto q = read_queries(dir / "q.txt", 2);
    REQUIRE(q.size() == 2);
    CHECK(q[1] == fx::Tuple{2, 3});
    fx::spit(dir / "bad.txt", "0 1 2\n");
    CHECK_THROWS_AS(read_queries(dir / "bad.txt", 2), Error);
    try {
        read_queries(dir / "absent.txt", 2);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
    }
}
