#include "taskdenoise/metrics.hpp"

#include "taskdenoise/error.hpp"
#include "taskdenoise/kernels.hpp"

#include "fft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace tdn::metrics {

double rms(const Mat& x) {
    if (x.size() == 0) throw ValidationError("rms of an empty matrix");
    return std::sqrt(kernels::sum_sq({x.data(), static_cast<std::size_t>(x.size())}) / static_cast<double>(x.size()));
}

double mse(const Mat& xhat, const Mat& xref) {
    if (xhat.rows() != xref.rows() || xhat.cols() != xref.cols()) throw ValidationError("mse shape mismatch");
    if (xref.size() == 0) throw ValidationError("mse of empty matrices");
    const auto n = static_cast<std::size_t>(xref.size());
    return kernels::sum_sq_diff({xhat.data(), n}, {xref.data(), n}) / static_cast<double>(n);
}

double snr_db(const Mat& xhat, const Mat& xref) {
    const double ref = rms(xref);
    if (ref == 0.0) throw ValidationError("snr_db with an all-zero reference");
    const double resid = std::sqrt(mse(xhat, xref));
    if (resid < 1e-300) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(ref / resid);
}

SignalQuality signal_quality(const Mat& xhat, const Mat& xref) { return {mse(xhat, xref), snr_db(xhat, xref)}; }

ClassReport class_report(std::span<const int> pred, std::span<const int> truth, int num_classes) {
    if (num_classes < 2) throw ValidationError("class_report needs K >= 2");
    if (pred.size() != truth.size()) throw ValidationError("pred and truth lengths differ");
    if (truth.empty()) throw ValidationError("class_report on zero samples");
    const auto k = static_cast<std::size_t>(num_classes);
    ClassReport r;
    r.num_classes = num_classes;
    r.total = truth.size();
    r.confusion.assign(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (pred[i] < 0 || pred[i] >= num_classes || truth[i] < 0 || truth[i] >= num_classes) {
            throw ValidationError("label outside [0, K) at index " + std::to_string(i));
        }
        ++r.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
    }
    std::size_t correct = 0;
    r.precision.assign(k, 0.0);
    r.recall.assign(k, 0.0);
    r.f1.assign(k, 0.0);
    r.support.assign(k, 0);
    for (std::size_t c = 0; c < k; ++c) {
        const std::size_t tp = r.confusion[c][c];
        correct += tp;
        std::size_t predicted = 0;
        for (std::size_t t = 0; t < k; ++t) {
            predicted += r.confusion[t][c];
            r.support[c] += r.confusion[c][t];
        }
        bool flagged = false;
        if (predicted > 0) {
            r.precision[c] = static_cast<double>(tp) / static_cast<double>(predicted);
        } else {
            flagged = true;
        }
        if (r.support[c] > 0) {
            r.recall[c] = static_cast<double>(tp) / static_cast<double>(r.support[c]);
        } else {
            flagged = true;
        }
        const double pr = r.precision[c] + r.recall[c];
        r.f1[c] = pr > 0.0 ? 2.0 * r.precision[c] * r.recall[c] / pr : 0.0;
        if (flagged) r.zero_division.push_back(static_cast<int>(c));
    }
    const double kd = static_cast<double>(k);
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
    r.macro_precision = std::accumulate(r.precision.begin(), r.precision.end(), 0.0) / kd;
    r.macro_recall = std::accumulate(r.recall.begin(), r.recall.end(), 0.0) / kd;
    r.macro_f1 = std::accumulate(r.f1.begin(), r.f1.end(), 0.0) / kd;
    return r;
}

namespace {

std::vector<double> hann(std::size_t n) {
    std::vector<double> w(n);
    if (n == 1) {
        w[0] = 1.0;
        return w;
    }
    // Periodic Hann, as used for spectral estimation.
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
    return w;
}

}  // namespace

Psd welch_psd(std::span<const double> x, double fs, std::size_t segment, double overlap) {
    if (x.size() < 2) throw ValidationError("welch_psd needs at least 2 samples");
    if (!(fs > 0.0)) throw ValidationError("welch_psd needs fs > 0");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ValidationError("overlap must lie in [0, 1)");
    const std::size_t len = std::min(segment, x.size());
    const std::size_t step = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(len * (1.0 - overlap))));
    const std::vector<double> w = hann(len);
    double wss = 0.0;
    for (double v : w) wss += v * v;
    const std::size_t nf = len / 2 + 1;

    Psd psd;
    psd.freqs.resize(nf);
    psd.density.assign(nf, 0.0);
    for (std::size_t i = 0; i < nf; ++i) psd.freqs[i] = static_cast<double>(i) * fs / static_cast<double>(len);

    std::vector<double> seg(len);
    std::size_t count = 0;
    for (std::size_t start = 0; start + len <= x.size(); start += step, ++count) {
        double mean = 0.0;
        for (std::size_t i = 0; i < len; ++i) mean += x[start + i];
        mean /= static_cast<double>(len);
        for (std::size_t i = 0; i < len; ++i) seg[i] = (x[start + i] - mean) * w[i];
        const auto spec = fft::rfft(seg);
        for (std::size_t f = 0; f < nf; ++f) psd.density[f] += std::norm(spec[f]);
    }
    const double norm = 1.0 / (fs * wss * static_cast<double>(count));
    for (std::size_t f = 0; f < nf; ++f) {
        const bool edge = f == 0 || (len % 2 == 0 && f == nf - 1);
        psd.density[f] *= norm * (edge ? 1.0 : 2.0);
    }
    return psd;
}

double integrate_band(const Psd& psd, double lo, double hi) {
    if (psd.freqs.size() < 2) return 0.0;
    const double df = psd.freqs[1] - psd.freqs[0];
    const double tol = 1e-9 * df;
    double s = 0.0;
    for (std::size_t i = 0; i < psd.freqs.size(); ++i) {
        if (psd.freqs[i] >= lo - tol && psd.freqs[i] <= hi + tol) s += psd.density[i];
    }
    return s * df;
}

std::vector<double> band_power_ratio(std::span<const double> x, double fs, double a_lo, double a_hi, double b_lo,
                                     double b_hi, double window_s, double hop_s) {
    const auto win = static_cast<std::size_t>(std::lround(window_s * fs));
    const auto hop = static_cast<std::size_t>(std::lround(hop_s * fs));
    if (win < 2 || hop < 1) throw ValidationError("band_power_ratio window or hop too short");
    if (x.size() < win) throw ValidationError("signal shorter than one ratio window");
    // Half-open bands so a shared edge is not counted twice.
    const double a_top = a_hi - 1e-9;
    const double b_top = b_hi - 1e-9;
    std::vector<double> out;
    for (std::size_t start = 0; start + win <= x.size(); start += hop) {
        const Psd psd = welch_psd(x.subspan(start, win), fs, win, 0.0);
        const double pa = integrate_band(psd, a_lo, a_top);
        const double pb = integrate_band(psd, b_lo, b_top);
        out.push_back(pb > 0.0 ? pa / pb : (pa > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
    }
    return out;
}

double fundamental_power_ratio(std::span<const double> x, double fs, double f0) {
    const Psd psd = welch_psd(x, fs, x.size(), 0.0);
    const double total = integrate_band(psd, 5.0, 45.0);
    if (total <= 0.0) return 0.0;
    return integrate_band(psd, f0 - 0.25, f0 + 0.25) / total;
}

std::string_view to_string(TestMethod m) { return m == TestMethod::Exact ? "exact" : "normal_approx"; }

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("wilcoxon: samples must be paired");
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double v = a[i] - b[i];
        if (!std::isfinite(v)) throw ValidationError("wilcoxon: non-finite difference");
        if (v != 0.0) d.push_back(v);
    }
    const std::size_t n = d.size();
    if (n == 0) throw ValidationError("wilcoxon: all differences are zero");

    std::vector<double> mag(n);
    for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(d[i]);
    const std::vector<double> ranks = average_ranks(mag);

    TestResult r;
    r.n_effective = n;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += ranks[i];
        if (d[i] > 0.0) r.w_plus += ranks[i];
    }
    r.statistic = std::min(r.w_plus, total - r.w_plus);

    if (n <= 25) {
        r.method = TestMethod::Exact;
        // Average ranks are multiples of 1/2, so doubled ranks are integers.
        std::vector<std::size_t> dr(n);
        std::size_t max_sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            dr[i] = static_cast<std::size_t>(std::lround(2.0 * ranks[i]));
            max_sum += dr[i];
        }
        std::vector<double> count(max_sum + 1, 0.0);
        count[0] = 1.0;
        std::size_t reach = 0;
        for (std::size_t v : dr) {
            for (std::size_t s = reach + 1; s-- > 0;) {
                if (count[s] != 0.0) count[s + v] += count[s];
            }
            reach += v;
        }
        const auto w2 = static_cast<std::size_t>(std::lround(2.0 * r.w_plus));
        double lower = 0.0;
        double upper = 0.0;
        for (std::size_t s = 0; s <= max_sum; ++s) {
            if (s <= w2) lower += count[s];
            if (s >= w2) upper += count[s];
        }
        const double all = std::ldexp(1.0, static_cast<int>(n));
        r.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / all);
    } else {
        r.method = TestMethod::NormalApprox;
        const double nd = static_cast<double>(n);
        const double mean = nd * (nd + 1.0) / 4.0;
        double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0;
        std::vector<double> sorted = ranks;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < n;) {
            std::size_t j = i;
            while (j < n && sorted[j] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i);
            var -= (t * t * t - t) / 48.0;
            i = j;
        }
        const double z = (std::abs(r.w_plus - mean) - 0.5) / std::sqrt(var);
        r.p_value = z <= 0.0 ? 1.0 : std::min(1.0, std::erfc(z / std::numbers::sqrt2));
    }
    return r;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
    if (x.size() < 2) return std::nullopt;
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace tdn::metrics
