#include "doctest.h"
#include "helpers.hpp"

#include "criteria.hpp"
#include "taskdenoise/decomposition.hpp"
#include "taskdenoise/error.hpp"

#include <numbers>

using namespace tdn;
using tdn::testing::random_matrix;

namespace {

DecompConfig config(DecompMethod m) {
    DecompConfig c;
    c.method = m;
    // Gaussian test data has no independent structure for FastICA to lock onto.
    c.ica_strict = false;
    return c;
}

}  // namespace

TEST_CASE("components sum back to the trial") {
    CHECK(criteria::reconstruction_identity(5, 17) < 1e-9);
}

TEST_CASE("component set shape and residual position") {
    const Trial x(random_matrix(6, 300, 1), 128.0);
    for (DecompMethod m : {DecompMethod::PCA, DecompMethod::SVD, DecompMethod::ICA}) {
        CAPTURE(to_string(m));
        const ComponentSet cs = decompose(x, config(m), RngSeed{3});
        CHECK(cs.factor_count() == 6);
        CHECK(cs.size() == 7);
        CHECK(cs.channels() == 6);
        CHECK(cs.samples() == 300);
        CHECK(cs.method() == m);
        for (std::size_t i = 0; i < cs.factor_count(); ++i) {
            const Mat outer = cs.spatial()[i] * cs.temporal()[i].transpose();
            CHECK((outer - cs.component(i)).norm() <= 1e-12 * cs.component(i).norm());
        }
        const auto e = cs.energies();
        REQUIRE(e.size() == 7);
        for (std::size_t i = 0; i < 7; ++i) CHECK(e[i] == doctest::Approx(cs.component(i).squaredNorm()));
    }
}

TEST_CASE("PCA and SVD factor structure") {
    const Trial x(random_matrix(5, 400, 2), 128.0);
    const ComponentSet pca = decompose(x, config(DecompMethod::PCA), RngSeed{});
    const ComponentSet svd = decompose(x, config(DecompMethod::SVD), RngSeed{});
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            const double want = i == j ? 1.0 : 0.0;
            CHECK(pca.spatial()[i].dot(pca.spatial()[j]) == doctest::Approx(want).epsilon(1e-12));
            CHECK(svd.spatial()[i].dot(svd.spatial()[j]) == doctest::Approx(want).epsilon(1e-12));
            if (i != j) {
                CHECK(std::abs(svd.temporal()[i].dot(svd.temporal()[j])) <=
                      1e-10 * svd.temporal()[i].norm() * svd.temporal()[j].norm());
            }
        }
    }
    // Descending variance for PCA, descending singular values for SVD.
    for (std::size_t i = 0; i + 1 < 5; ++i) {
        CHECK(pca.temporal()[i].squaredNorm() >= pca.temporal()[i + 1].squaredNorm());
        CHECK(svd.temporal()[i].norm() >= svd.temporal()[i + 1].norm());
    }
    // SVD is uncentred and exact without a residual.
    CHECK(svd.residual().norm() <= 1e-10 * x.data().norm());
    // PCA puts the channel means in the residual.
    const Vec mu = x.data().rowwise().mean();
    CHECK((pca.residual().rowwise().mean() - mu).norm() <= 1e-10);
}

TEST_CASE("rank-deficient trials keep a zero-energy residual") {
    const Mat a = random_matrix(6, 2, 4);
    const Mat b = random_matrix(2, 256, 5);
    const Trial x(a * b, 128.0);
    for (DecompMethod m : {DecompMethod::SVD, DecompMethod::PCA, DecompMethod::ICA}) {
        CAPTURE(to_string(m));
        const ComponentSet cs = decompose(x, config(m), RngSeed{6});
        CHECK(cs.factor_count() <= 3);
        CHECK(cs.size() == cs.factor_count() + 1);
    }
    const ComponentSet zero = decompose(Trial(Mat::Zero(3, 64), 128.0), config(DecompMethod::ICA), RngSeed{});
    CHECK(zero.size() == 1);
    CHECK(zero.residual().norm() == 0.0);
}

TEST_CASE("ICA recovers known sources") {
    CHECK(criteria::ica_recovery(10, 21) > 0.95);
}

TEST_CASE("decomposition is deterministic for a seed") {
    const Trial x(random_matrix(4, 256, 8), 128.0);
    for (DecompMethod m : {DecompMethod::PCA, DecompMethod::SVD, DecompMethod::ICA}) {
        const ComponentSet a = decompose(x, config(m), RngSeed{9});
        const ComponentSet b = decompose(x, config(m), RngSeed{9});
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.component(i) == b.component(i));
    }
}

TEST_CASE("FastICA non-convergence: strict throws, lenient reports") {
    CHECK(DecompConfig{}.ica_strict);
    const Trial x(random_matrix(6, 512, 10), 128.0);
    DecompConfig cfg = config(DecompMethod::ICA);
    cfg.ica_strict = true;
    cfg.ica_max_iter = 1;
    cfg.ica_tol = 1e-12;
    CHECK_THROWS_AS(decompose(x, cfg, RngSeed{1}), ConvergenceError);
    cfg.ica_strict = false;
    const ComponentSet cs = decompose(x, cfg, RngSeed{1});
    CHECK_FALSE(cs.convergence().converged);
    CHECK(cs.convergence().iterations == 1);
    Mat sum = Mat::Zero(6, 512);
    for (const auto& c : cs.components()) sum += c;
    CHECK((sum - x.data()).norm() <= 1e-10 * x.data().norm());
}

TEST_CASE("weighted reconstruction") {
    const Trial x(random_matrix(4, 128, 11), 128.0);
    const ComponentSet cs = decompose(x, config(DecompMethod::PCA), RngSeed{});
    std::vector<double> ones(cs.size(), 1.0);
    CHECK((reconstruct_matrix(cs, ones) - x.data()).norm() <= 1e-12 * x.data().norm());
    std::vector<double> zeros(cs.size(), 0.0);
    CHECK(reconstruct_matrix(cs, zeros).norm() == 0.0);
    std::vector<double> first(cs.size(), 0.0);
    first[0] = 0.5;
    CHECK((reconstruct(cs, first).data() - 0.5 * cs.component(0)).norm() == 0.0);
    std::vector<double> wrong(cs.size() + 1, 1.0);
    CHECK_THROWS_AS(reconstruct_matrix(cs, wrong), ValidationError);
}

TEST_CASE("config validation and names") {
    DecompConfig c;
    c.ica_max_iter = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    CHECK(parse_decomp_method("svd") == DecompMethod::SVD);
    CHECK_THROWS_AS(parse_decomp_method("nmf"), ValidationError);
    CHECK(parse_ica_nonlinearity("cube") == IcaNonlinearity::Cube);
}
