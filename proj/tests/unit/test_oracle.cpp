#include <doctest.h>

#include "fixtures.hpp"
#include "ltlp/error.hpp"
#include "ltlp/oracle.hpp"

using namespace ltlp;
using namespace ltlp::oracle;

namespace {

std::vector<NormalizedGraph> normalize_all(const std::vector<Graph>& gs) {
    std::vector<NormalizedGraph> out;
    for (const auto& g : gs) out.push_back(normalize(g));
    return out;
}

}  // namespace

TEST_CASE("densify follows the row-major layout") {
    fx::Rng rng(1);
    auto sp = fx::random_sparse({3, 4, 2}, 8, rng);
    CHECK(densify(sp).data == fx::dense_vec(sp));
    auto cp = fx::random_cp({2, 3}, 2, rng);
    CHECK((densify(cp).data - fx::dense_vec(cp)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK_THROWS_AS(densify(SparseTensor({200, 200, 200}, {}, {})), Error);
}

TEST_CASE("kron_all matches the naive Kronecker product") {
    fx::Rng rng(2);
    auto gs = fx::random_graphs({3, 2, 4}, rng);
    auto s = fx::normalized_all(gs);
    CHECK((kron_all(s) - fx::kron_chain(s)).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(kron_all(s, 10), Error);
}

TEST_CASE("mode products compose to the Kronecker matrix-vector product") {
    fx::Rng rng(3);
    auto gs = fx::random_graphs({3, 4, 2}, rng);
    auto s = fx::normalized_all(gs);
    DenseTensor y = densify(fx::random_sparse({3, 4, 2}, 10, rng));
    DenseTensor z = y;
    for (std::size_t l = 0; l < 3; ++l) z = mode_product(z, l, s[l]);
    CHECK((z.data - fx::kron_chain(s) * y.data).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("zero iterations leave Y0 unchanged") {
    fx::Rng rng(4);
    auto gs = fx::random_graphs({3, 4}, rng);
    DenseTensor y0 = densify(fx::random_sparse({3, 4}, 5, rng));
    IterateOptions opts;
    opts.max_iters = 0;
    auto res = exact_iterate(normalize_all(gs), y0, 0.5, opts);
    CHECK(res.iterations == 0);
    CHECK(res.y.data == y0.data);
}

TEST_CASE("200 iterations approach the closed form") {
    fx::Rng rng(5);
    auto gs = fx::random_graphs({3, 4, 2}, rng);
    auto ns = normalize_all(gs);
    auto sp = fx::random_sparse({3, 4, 2}, 6, rng);
    DenseTensor y0 = densify(sp);
    IterateOptions opts;
    opts.max_iters = 200;
    opts.stop_tol = 0;
    auto res = exact_iterate(ns, y0, 0.5, opts);
    CHECK(res.iterations == 200);
    auto cf = exact_closed_form(ns, y0, 0.5);
    CHECK((res.y.data - cf.eigen.data).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((cf.direct.data - fx::closed_form(gs, sp, 0.5)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("single graph iteration is the classical update") {
    fx::Rng rng(6);
    auto gs = fx::random_graphs({6}, rng);
    auto ns = normalize_all(gs);
    DenseTensor y0 = densify(fx::random_sparse({6}, 3, rng));
    IterateOptions opts;
    opts.max_iters = 7;
    opts.stop_tol = 0;
    auto res = exact_iterate(ns, y0, 0.3, opts);
    Eigen::VectorXd y = y0.data;
    for (int t = 0; t < 7; ++t) y = 0.3 * ns[0].matrix() * y + 0.7 * y0.data;
    CHECK((res.y.data - y).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("empty graphs give the scaled initial tensor") {
    std::vector<Graph> gs{Graph::from_dense(Eigen::MatrixXd::Zero(3, 3)), Graph::from_dense(Eigen::MatrixXd::Zero(2, 2))};
    auto ns = normalize_all(gs);
    fx::Rng rng(7);
    DenseTensor y0 = densify(fx::random_sparse({3, 2}, 4, rng));
    auto cf = exact_closed_form(ns, y0, 0.5);
    CHECK((cf.direct.data - 0.5 * y0.data).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((cf.eigen.data - 0.5 * y0.data).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("closed form matches 500 iterations on 3x3 and 4x4 graphs") {
    fx::Rng rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        auto gs = fx::random_graphs({3, 4}, rng);
        auto ns = normalize_all(gs);
        DenseTensor y0 = densify(fx::random_sparse({3, 4}, 5, rng));
        IterateOptions opts;
        opts.max_iters = 500;
        opts.stop_tol = 0;
        double alpha = 0.2 + 0.15 * trial;
        auto it = exact_iterate(ns, y0, alpha, opts);
        auto cf = exact_closed_form(ns, y0, alpha);
        CHECK((it.y.data - cf.direct.data).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(cf.max_path_gap <= 1e-9);
    }
}

TEST_CASE("iteration steps shrink geometrically") {
    fx::Rng rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        auto gs = fx::random_graphs({4, 3, 3}, rng);
        DenseTensor y0 = densify(fx::random_sparse({4, 3, 3}, 9, rng));
        double alpha = 0.1 + 0.2 * trial;
        auto res = exact_iterate(normalize_all(gs), y0, alpha);
        CHECK(res.step_norms.back() <= 1e-10);
        for (std::size_t t = 1; t < res.step_norms.size(); ++t)
            CHECK(res.step_norms[t] <= alpha * res.step_norms[t - 1] * (1 + 1e-9) + 1e-15);
    }
}

TEST_CASE("closed form agrees with full-rank propagation") {
    fx::Rng rng(10);
    auto gs = fx::random_graphs({4, 3, 5}, rng);
    auto sp = fx::random_sparse({4, 3, 5}, 12, rng);
    auto cf = exact_closed_form(normalize_all(gs), densify(sp), 0.7);
    auto model = build_model(std::span<const Graph>(gs), fx::share(sp), 0.7, 60);
    for (const auto& t : fx::all_tuples(model.dims()))
        CHECK(std::abs(model.score(t) - cf.direct.at(t)) <= 1e-8);
}

TEST_CASE("best rank-k transform edges") {
    fx::Rng rng(11);
    auto gs = fx::random_graphs({3, 3}, rng);
    auto ns = normalize_all(gs);
    Eigen::MatrixXd a = transform(ns, 0.5);
    CHECK((a - fx::transform_a(gs, 0.5)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((best_rank_k_transform(ns, 0.5, 9) - a).norm() == 0.0);
    Eigen::MatrixXd zero = best_rank_k_transform(ns, 0.5, 0);
    CHECK(zero.norm() == 0.0);
    CHECK((zero - a).norm() == doctest::Approx(a.norm()));
    Eigen::MatrixXd a3 = best_rank_k_transform(ns, 0.5, 3);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a3);
    CHECK(svd.singularValues()(3) <= 1e-10);
}

TEST_CASE("selected approximation beats the best rank-k transform") {
    fx::Rng rng(12);
    for (int trial = 0; trial < 5; ++trial) {
        auto gs = fx::random_graphs({4, 4}, rng);
        auto ns = normalize_all(gs);
        auto eigs = fx::decompose(gs);
        double alpha = trial % 2 ? 0.9 : 0.1;
        Eigen::MatrixXd a = transform(ns, alpha);
        for (std::size_t k : {1u, 4u, 8u}) {
            auto spec = select_eigenpairs(eigs, alpha, k);
            Eigen::MatrixXd ahat = approx_transform(spec);
            CHECK((ahat - fx::transform_hat(eigs, spec.index, alpha)).cwiseAbs().maxCoeff() <= 1e-10);
            Eigen::MatrixXd ak = best_rank_k_transform(ns, alpha, k);
            CHECK((ahat - a).norm() < (ak - a).norm());
            CHECK(spectral_norm_sym(ahat - a) < spectral_norm_sym(ak - a));
        }
    }
}

TEST_CASE("spectral norm of a symmetric matrix") {
    fx::Rng rng(13);
    Eigen::MatrixXd m(6, 6);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = fx::uniform(rng, -1, 1);
    m = (m + m.transpose()).eval();
    CHECK(spectral_norm_sym(m) == doctest::Approx(fx::spectral_norm(m)).epsilon(1e-12));
}

TEST_CASE("check_instance passes on small instances") {
    fx::Rng rng(14);
    for (int trial = 0; trial < 5; ++trial) {
        auto gs = fx::random_graphs({3, 4, 2}, rng);
        auto sp = fx::random_sparse({3, 4, 2}, 6, rng);
        auto rep = check_instance(gs, sp, 0.5, 1 + 5 * trial);
        CHECK(rep.pass());
        CHECK(rep.full_rank_deviation <= kFullRankTolerance);
        CHECK(rep.lowrank_deviation <= rep.error_bound + 1e-12);
        CHECK(rep.perturbation.frobenius == doctest::Approx(rep.dense_perturbation.frobenius).epsilon(1e-8));
        CHECK(rep.rank_k_comparison_applicable);
    }
}

TEST_CASE("check_instance at full rank reports zero perturbation") {
    fx::Rng rng(15);
    auto gs = fx::random_graphs({3, 3}, rng);
    auto rep = check_instance(gs, fx::random_sparse({3, 3}, 3, rng), 0.5, 9);
    CHECK(rep.perturbation.spectral == 0.0);
    CHECK(rep.perturbation.frobenius == 0.0);
    CHECK(!rep.rank_k_comparison_applicable);
    CHECK(rep.pass());
}

TEST_CASE("check_instance refuses instances above the cap") {
    fx::Rng rng(16);
    auto gs = fx::random_graphs({20, 20, 20}, rng, 0.2);
    CHECK_THROWS_AS(check_instance(gs, SparseTensor({20, 20, 20}, {}, {}), 0.5, 5), Error);
}

TEST_CASE("subset search agrees with the dense brute force") {
    fx::Rng rng(17);
    auto gs = fx::random_graphs({2, 3}, rng);
    auto eigs = fx::decompose(gs);
    Eigen::MatrixXd a = fx::transform_a(gs, 0.6);
    auto all = fx::all_tuples({2, 3});
    for (std::size_t k = 1; k <= 3; ++k) {
        std::vector<bool> mask(all.size(), false);
        std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
        double best = 1e300;
        do {
            std::vector<fx::Tuple> pick;
            for (std::size_t i = 0; i < all.size(); ++i)
                if (mask[i]) pick.push_back(all[i]);
            best = std::min(best, (fx::transform_hat(eigs, pick, 0.6) - a).norm());
        } while (std::prev_permutation(mask.begin(), mask.end()));
        CHECK(min_frobenius_over_subsets(eigs, 0.6, k) == doctest::Approx(best).epsilon(1e-9));
    }
}
