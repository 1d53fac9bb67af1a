#pragma once
// Signal-quality, classification, spectral and paired-test metrics.

#include "taskdenoise/signal.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace tdn::metrics {

double rms(const Mat& x);
double mse(const Mat& xhat, const Mat& xref);
// 20 log10(rms(xref) / rms(xhat - xref)); +inf when the residual RMS is below 1e-300.
double snr_db(const Mat& xhat, const Mat& xref);

struct SignalQuality {
    double mse = 0.0;
    double snr_db = 0.0;
};
SignalQuality signal_quality(const Mat& xhat, const Mat& xref);

struct ClassReport {
    int num_classes = 0;
    std::size_t total = 0;
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
    std::vector<std::size_t> support;
    // Classes never predicted (precision set to 0) or never present (recall set to 0).
    std::vector<int> zero_division;
    std::vector<std::vector<std::size_t>> confusion;  // [truth][pred]
};

ClassReport class_report(std::span<const int> pred, std::span<const int> truth, int num_classes);

struct Psd {
    std::vector<double> freqs;
    std::vector<double> density;
};

// One-sided Welch PSD: Hann window, per-segment mean removal, 50% overlap.
// Signals shorter than the segment use a single segment of their own length.
Psd welch_psd(std::span<const double> x, double fs, std::size_t segment = 256, double overlap = 0.5);

// Sum of density * df over bins with lo <= f <= hi.
double integrate_band(const Psd& psd, double lo, double hi);

// Sliding-window ratio of band_a power to band_b power.
std::vector<double> band_power_ratio(std::span<const double> x, double fs, double a_lo = 8.0, double a_hi = 12.0,
                                     double b_lo = 12.0, double b_hi = 30.0, double window_s = 1.0,
                                     double hop_s = 0.125);

// Power within f0 +- 0.25 Hz over power in [5, 45] Hz, from a single Hann
// segment spanning the whole signal.
double fundamental_power_ratio(std::span<const double> x, double fs, double f0);

enum class TestMethod { Exact, NormalApprox };
std::string_view to_string(TestMethod m);

struct TestResult {
    double statistic = 0.0;  // min(W+, W-)
    double w_plus = 0.0;
    double p_value = 1.0;
    std::size_t n_effective = 0;
    TestMethod method = TestMethod::Exact;
};

// Two-sided paired test of a - b. Zero differences dropped, ties averaged.
TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> x);

// Spearman rank correlation; nullopt when either side is constant or n < 2.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

}  // namespace tdn::metrics
