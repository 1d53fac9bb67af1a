#include "doctest.h"
#include "helpers.hpp"

#include "criteria.hpp"
#include "taskdenoise/error.hpp"
#include "taskdenoise/metrics.hpp"

#include <cmath>
#include <limits>
#include <numbers>

using namespace tdn;
using namespace tdn::metrics;
using tdn::testing::fixture;
using tdn::testing::random_matrix;

namespace {

std::vector<double> vec(const nlohmann::json& j) { return j.get<std::vector<double>>(); }

std::vector<double> tone(std::size_t n, double fs, double f0, double amp = 1.0, double phase = 0.0) {
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = amp * std::sin(2.0 * std::numbers::pi * f0 * t / fs + phase);
    return x;
}

}  // namespace

TEST_CASE("rms, mse and snr") {
    Mat ref(1, 4);
    ref << 1, -1, 1, -1;
    Mat hat = ref;
    hat(0, 0) += 0.1;
    CHECK(rms(ref) == doctest::Approx(1.0));
    CHECK(mse(hat, ref) == doctest::Approx(0.01 / 4));
    CHECK(snr_db(hat, ref) == doctest::Approx(20.0 * std::log10(1.0 / 0.05)));
    CHECK(std::isinf(snr_db(ref, ref)));
    CHECK(snr_db(ref, ref) > 0.0);

    const Mat x = random_matrix(3, 100, 1);
    const Mat n = random_matrix(3, 100, 2);
    for (double target : {-5.0, 0.0, 7.5}) {
        const double lambda = rms(x) / (rms(n) * std::pow(10.0, target / 20.0));
        CHECK(snr_db(x + lambda * n, x) == doctest::Approx(target).epsilon(1e-12));
    }
    const auto q = signal_quality(hat, ref);
    CHECK(q.mse == mse(hat, ref));
    CHECK(q.snr_db == snr_db(hat, ref));
}

TEST_CASE("class report matches scikit-learn") {
    for (const auto& c : fixture("class_report.json")) {
        const auto truth = c["truth"].get<std::vector<int>>();
        const auto pred = c["pred"].get<std::vector<int>>();
        const int k = c["k"];
        const ClassReport r = class_report(pred, truth, k);
        CHECK(r.accuracy == doctest::Approx(c["accuracy"].get<double>()).epsilon(1e-12));
        CHECK(r.macro_f1 == doctest::Approx(c["macro_f1"].get<double>()).epsilon(1e-12));
        for (int i = 0; i < k; ++i) {
            CHECK(r.precision[i] == doctest::Approx(c["precision"][i].get<double>()).epsilon(1e-12));
            CHECK(r.recall[i] == doctest::Approx(c["recall"][i].get<double>()).epsilon(1e-12));
            CHECK(r.f1[i] == doctest::Approx(c["f1"][i].get<double>()).epsilon(1e-12));
            CHECK(r.support[i] == c["support"][i].get<std::size_t>());
        }
        std::size_t total = 0;
        for (const auto& row : r.confusion)
            for (auto v : row) total += v;
        CHECK(total == truth.size());
        if (k == 3) CHECK(std::find(r.zero_division.begin(), r.zero_division.end(), 2) != r.zero_division.end());
    }
}

TEST_CASE("class report edge cases") {
    const std::vector<int> truth{0, 0, 1, 1};
    const std::vector<int> pred{0, 0, 1, 1};
    const auto r = class_report(pred, truth, 2);
    CHECK(r.accuracy == 1.0);
    CHECK(r.macro_f1 == 1.0);
    CHECK(r.zero_division.empty());
    const std::vector<int> short_pred{0};
    CHECK_THROWS_AS(class_report(short_pred, truth, 2), ValidationError);
}

TEST_CASE("Welch PSD matches scipy.signal.welch") {
    for (const auto& c : fixture("welch.json")) {
        const auto x = vec(c["x"]);
        const Psd p = welch_psd(x, c["fs"].get<double>(), c["segment"].get<std::size_t>());
        const auto f = vec(c["freqs"]);
        const auto d = vec(c["density"]);
        REQUIRE(p.freqs.size() == f.size());
        double peak = 0.0;
        for (double v : d) peak = std::max(peak, v);
        for (std::size_t i = 0; i < f.size(); ++i) {
            CHECK(p.freqs[i] == doctest::Approx(f[i]).epsilon(1e-12));
            CHECK(std::abs(p.density[i] - d[i]) <= 1e-10 * peak);
        }
    }
}

TEST_CASE("Welch band power recovers a tone's variance") {
    const double fs = 128.0;
    const auto x = tone(4096, fs, 10.0, 2.0);
    const Psd p = welch_psd(x, fs);
    // Hann leakage stays within a few bins of 10 Hz.
    CHECK(integrate_band(p, 8.0, 12.0) == doctest::Approx(2.0).epsilon(0.02));
    CHECK(integrate_band(p, 20.0, 40.0) < 1e-6);
    CHECK(integrate_band(p, 12.0, 8.0) == 0.0);
}

TEST_CASE("band power ratio tracks alpha attenuation") {
    const double fs = 128.0;
    const std::size_t n = 1024;
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double s = static_cast<double>(t) / fs;
        const double alpha = t < n / 2 ? 2.0 : 0.5;
        x[t] = alpha * std::sin(2.0 * std::numbers::pi * 10.0 * s) + std::sin(2.0 * std::numbers::pi * 20.0 * s);
    }
    const auto r = band_power_ratio(x, fs);
    REQUIRE(r.size() > 4);
    CHECK(r.front() > 4.0 * r.back());
    CHECK(r.front() == doctest::Approx(4.0).epsilon(0.15));
    CHECK(r.back() == doctest::Approx(0.25).epsilon(0.15));
}

TEST_CASE("fundamental power ratio") {
    const double fs = 128.0;
    const auto pure = tone(512, fs, 11.0);
    CHECK(fundamental_power_ratio(pure, fs, 11.0) > 0.95);
    CHECK(fundamental_power_ratio(pure, fs, 13.0) < 0.01);
    auto mixed = pure;
    const auto other = tone(512, fs, 30.0, 2.0);
    for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] += other[i];
    const double r = fundamental_power_ratio(mixed, fs, 11.0);
    CHECK(r == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("average ranks") {
    const std::vector<double> x{3.0, 1.0, 3.0, 2.0, 3.0};
    CHECK(average_ranks(x) == std::vector<double>{4.0, 1.0, 4.0, 2.0, 4.0});
}

TEST_CASE("Wilcoxon signed-rank matches scipy.stats.wilcoxon") {
    for (const auto& c : fixture("wilcoxon.json")) {
        const auto a = vec(c["a"]);
        const auto b = vec(c["b"]);
        const TestResult r = wilcoxon_signed_rank(a, b);
        CAPTURE(a.size());
        CHECK(to_string(r.method) == c["method"].get<std::string>());
        CHECK(r.statistic == doctest::Approx(c["statistic"].get<double>()).epsilon(1e-12));
        CHECK(r.w_plus == doctest::Approx(c["w_plus"].get<double>()).epsilon(1e-12));
        CHECK(r.p_value == doctest::Approx(c["p_value"].get<double>()).epsilon(1e-9));
    }
}

TEST_CASE("Wilcoxon exact p equals full sign enumeration") {
    CHECK(criteria::wilcoxon_oracle(200, 3) <= 1e-12);
    // Hand case: n = 3 all positive, W+ = 6, P(W+ >= 6) = 1/8, two-sided 1/4.
    const std::vector<double> a{1, 2, 3};
    const std::vector<double> b{0, 0, 0};
    CHECK(wilcoxon_signed_rank(a, b).p_value == doctest::Approx(0.25));
    CHECK(criteria::wilcoxon_enumeration_p(a, b) == doctest::Approx(0.25));
}

TEST_CASE("Wilcoxon rejects degenerate input") {
    const std::vector<double> a{1, 2};
    const std::vector<double> b{1, 2};
    CHECK_THROWS_AS(wilcoxon_signed_rank(a, b), ValidationError);
    const std::vector<double> c{1};
    CHECK_THROWS_AS(wilcoxon_signed_rank(a, c), ValidationError);
}

TEST_CASE("Spearman matches scipy.stats.spearmanr") {
    for (const auto& c : fixture("spearman.json")) {
        const auto x = vec(c["x"]);
        const auto y = vec(c["y"]);
        const auto rho = spearman(x, y);
        REQUIRE(rho);
        CHECK(*rho == doctest::Approx(c["rho"].get<double>()).epsilon(1e-12));
    }
    const std::vector<double> flat{1, 1, 1};
    const std::vector<double> y{1, 2, 3};
    CHECK_FALSE(spearman(flat, y));
    const std::vector<double> one{1};
    CHECK_FALSE(spearman(one, one));
}
