#include "doctest.h"

#include "taskdenoise/kernels.hpp"
#include "taskdenoise/rng.hpp"

#include <cmath>
#include <cstdlib>
#include <vector>

using namespace tdn;
using namespace tdn::kernels;

namespace {

std::vector<double> draw(std::size_t n, Engine& eng, double scale) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * normal(eng);
    return v;
}

// Variants differ only in summation order and FMA contraction, so compare
// against the magnitude of the terms rather than the result.
void check_equivalent(const KernelTable& ref, const KernelTable& simd) {
    Engine eng = make_engine(RngSeed{99});
    for (std::size_t n = 0; n <= 70; ++n) {
        for (double scale : {1.0, 1e-150, 1e150}) {
            CAPTURE(n);
            CAPTURE(scale);
            const auto a = draw(n, eng, scale);
            const auto b = draw(n, eng, 1.0);
            double mag = 0.0;
            double mag_sq = 0.0;
            double mag_diff = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                mag += std::abs(a[i] * b[i]);
                mag_sq += a[i] * a[i];
                mag_diff += (a[i] - b[i]) * (a[i] - b[i]);
            }
            const double tol = 1e-14 * static_cast<double>(n + 1);
            CHECK(std::abs(ref.dot(a.data(), b.data(), n) - simd.dot(a.data(), b.data(), n)) <= tol * mag);
            CHECK(std::abs(ref.sum_sq(a.data(), n) - simd.sum_sq(a.data(), n)) <= tol * mag_sq);
            CHECK(std::abs(ref.sum_sq_diff(a.data(), b.data(), n) - simd.sum_sq_diff(a.data(), b.data(), n)) <=
                  tol * mag_diff);

            auto y1 = b;
            auto y2 = b;
            ref.axpy(-0.75, a.data(), y1.data(), n);
            simd.axpy(-0.75, a.data(), y2.data(), n);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(std::abs(y1[i] - y2[i]) <= 4e-16 * (0.75 * std::abs(a[i]) + std::abs(b[i])));
            }
            auto s1 = a;
            auto s2 = a;
            ref.scale(1.5, s1.data(), n);
            simd.scale(1.5, s2.data(), n);
            CHECK(s1 == s2);
        }
    }
}

}  // namespace

TEST_CASE("scalar kernels compute the textbook formulas") {
    const KernelTable& k = scalar_table();
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> b{5, 4, 3, 2, 1};
    CHECK(k.dot(a.data(), b.data(), 5) == 35.0);
    CHECK(k.sum_sq(a.data(), 5) == 55.0);
    CHECK(k.sum_sq_diff(a.data(), b.data(), 5) == 40.0);
    CHECK(k.dot(a.data(), b.data(), 0) == 0.0);
    auto y = b;
    k.axpy(2.0, a.data(), y.data(), 5);
    CHECK(y == std::vector<double>{7, 8, 9, 10, 11});
    k.scale(0.5, y.data(), 5);
    CHECK(y == std::vector<double>{3.5, 4, 4.5, 5, 5.5});
}

TEST_CASE("SIMD variants match the scalar reference") {
    int checked = 0;
    for (Isa isa : {Isa::Avx2, Isa::Neon}) {
        const KernelTable* t = table_for(isa);
        if (!t) continue;
        CAPTURE(isa_name(isa));
        CHECK(t->isa == isa);
        check_equivalent(scalar_table(), *t);
        ++checked;
    }
    MESSAGE("SIMD variants checked on this host: " << checked);
}

TEST_CASE("dispatch honours TASKDENOISE_SIMD and stays fixed") {
    const KernelTable& a = active();
    CHECK(&a == &active());
    if (const char* env = std::getenv("TASKDENOISE_SIMD"); env && std::string(env) == "scalar") {
        CHECK(a.isa == Isa::Scalar);
    }
    CHECK(table_for(a.isa) == &a);
}

TEST_CASE("matrix helpers") {
    // W = [[1, 2], [3, 4], [5, 6]]
    const std::vector<double> w{1, 2, 3, 4, 5, 6};
    const std::vector<double> x{1, -1};
    std::vector<double> y(3);
    gemv(w.data(), 3, 2, x.data(), y.data());
    CHECK(y == std::vector<double>{-1, -1, -1});
    const std::vector<double> d{1, 0, 2};
    std::vector<double> xt{0, 0};
    gemv_t_acc(w.data(), 3, 2, d.data(), xt.data());
    CHECK(xt == std::vector<double>{11, 14});
    std::vector<double> g(6, 0.0);
    outer_acc(d.data(), 3, x.data(), 2, g.data());
    CHECK(g == std::vector<double>{1, -1, 0, 0, 2, -2});
}
