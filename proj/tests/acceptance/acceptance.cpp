// One PASS/FAIL line per acceptance criterion.
//
//   taskdenoise_acceptance [--only 1,2,5] [--configs DIR] [--out FILE] [--reports DIR]
//
// Exit status is 0 only when every selected criterion passes. --always-zero
// keeps the verdict lines but exits 0 once all criteria were evaluated, which
// is how the ctest registration checks that the harness itself runs.

#include "criteria.hpp"

#include "taskdenoise/harness.hpp"

#include "CLI11.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#ifndef TDN_SOURCE_DIR
#define TDN_SOURCE_DIR "."
#endif

using namespace tdn;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string strf(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t count_if_pair(const std::vector<double>& a, const std::vector<double>& b,
                          const std::function<bool(double, double)>& pred) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) n += pred(a[i], b[i]) ? 1 : 0;
    return n;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

// Experiments are shared by several criteria and run at most once (plus the
// determinism rerun).
class Experiments {
public:
    Experiments(fs::path config_dir, fs::path report_dir)
        : config_dir_(std::move(config_dir)), report_dir_(std::move(report_dir)) {}

    const harness::EvalReport& erd() { return get("acceptance_erd_eog.json", erd_, erd_secs_); }
    const harness::EvalReport& ssvep() { return get("acceptance_ssvep_emg.json", ssvep_, ssvep_secs_); }
    double erd_seconds() const { return erd_secs_; }
    double ssvep_seconds() const { return ssvep_secs_; }

    harness::EvalReport rerun(const std::string& name) {
        return harness::run_experiment(config(name));
    }

    harness::ExperimentConfig config(const std::string& name) const {
        auto cfg = harness::load_config(config_dir_ / name);
        if (!report_dir_.empty()) cfg.output_dir = report_dir_ / cfg.name;
        return cfg;
    }

private:
    const harness::EvalReport& get(const std::string& name, std::optional<harness::EvalReport>& slot, double& secs) {
        if (!slot) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto cfg = config(name);
            slot = harness::run_experiment(cfg);
            secs = seconds_since(t0);
            if (!report_dir_.empty()) slot->write(cfg.output_dir);
        }
        return *slot;
    }

    fs::path config_dir_;
    fs::path report_dir_;
    std::optional<harness::EvalReport> erd_;
    std::optional<harness::EvalReport> ssvep_;
    double erd_secs_ = 0.0;
    double ssvep_secs_ = 0.0;
};

Verdict criterion_6(Experiments& ex) {
    const auto& rep = ex.erd();
    const auto& s = rep.summary(DecompMethod::ICA);
    const double gain = (s.acc_denoised - s.acc_baseline) * 100.0;
    const auto& t = s.test_acc_denoised_vs_baseline;
    const double p = t ? t->p_value : 1.0;
    const bool ok = !rep.failed && gain >= 1.0 && p < 0.05 && ex.erd_seconds() < 1800.0;
    return {ok, strf("accuracy %.2f%% -> %.2f%% (%+.2f pts), Wilcoxon p = %.4g over %zu seeds, %.0f s",
                    100.0 * s.acc_baseline, 100.0 * s.acc_denoised, gain, p, s.seed_acc_baseline.size(),
                    ex.erd_seconds())};
}

Verdict criterion_7(Experiments& ex) {
    const auto& s = ex.erd().summary(DecompMethod::ICA);
    const double gain = mean(s.seed_snr_denoised) - mean(s.seed_snr_noisy);
    const auto better = count_if_pair(s.seed_mse_denoised, s.seed_mse_noisy, std::less<double>());
    const std::size_t n = s.seed_mse_noisy.size();
    const bool ok = gain >= 1.0 && n > 0 && better * 10 >= 8 * n;
    return {ok, strf("SNR vs clean %+.3f dB (%.3f -> %.3f), MSE lower in %zu/%zu seeds", gain, mean(s.seed_snr_noisy),
                    mean(s.seed_snr_denoised), better, n)};
}

Verdict criterion_8(Experiments& ex) {
    const auto& rep = ex.ssvep();
    bool ok = !rep.failed && ex.ssvep_seconds() < 1800.0;
    std::string detail;
    for (DecompMethod m : {DecompMethod::PCA, DecompMethod::SVD, DecompMethod::ICA}) {
        const auto& s = rep.summary(m);
        const double gap = (mean(s.seed_acc_denoised) - mean(s.seed_acc_control)) * 100.0;
        ok = ok && gap >= 2.0;
        detail += strf("%s %.1f%% vs %.1f%% (%+.1f); ", std::string(to_string(m)).c_str(),
                      100.0 * mean(s.seed_acc_denoised), 100.0 * mean(s.seed_acc_control), gap);
    }
    return {ok, detail + strf("%.0f s", ex.ssvep_seconds())};
}

Verdict criterion_9(Experiments& ex) {
    const auto& rep = ex.ssvep();
    std::size_t positive = 0;
    std::string rhos;
    for (const auto& p : rep.probes) {
        if (p.table.spearman && *p.table.spearman > 0.0) ++positive;
        rhos += p.table.spearman ? strf("%+.2f ", *p.table.spearman) : std::string("n/a ");
    }
    const std::size_t n = rep.probes.size();
    const bool ok = n > 0 && positive * 10 >= 8 * n;
    return {ok, strf("Spearman > 0 in %zu/%zu seeds [ %s]", positive, n, rhos.c_str())};
}

Verdict criterion_10(Experiments& ex) {
    const auto& rep = ex.ssvep();
    bool ok = true;
    std::string detail;
    for (DecompMethod m : {DecompMethod::PCA, DecompMethod::SVD, DecompMethod::ICA}) {
        const auto& s = rep.summary(m);
        const auto up = count_if_pair(s.seed_fundamental_denoised, s.seed_fundamental_noisy, std::greater<double>());
        const std::size_t n = s.seed_fundamental_noisy.size();
        ok = ok && n > 0 && up * 10 >= 8 * n;
        detail += strf("%s %zu/%zu (%.4f -> %.4f); ", std::string(to_string(m)).c_str(), up, n,
                      mean(s.seed_fundamental_noisy), mean(s.seed_fundamental_denoised));
    }
    return {ok, detail};
}

Verdict criterion_12(Experiments& ex) {
    const std::string a1 = ex.erd().to_json(false).dump();
    const std::string a2 = ex.ssvep().to_json(false).dump();
    const std::string b1 = ex.rerun("acceptance_erd_eog.json").to_json(false).dump();
    const std::string b2 = ex.rerun("acceptance_ssvep_emg.json").to_json(false).dump();
    const bool same1 = a1 == b1;
    const bool same2 = a2 == b2;
    return {same1 && same2, strf("ERD/EOG payload %s (%zu bytes, hash %s); SSVEP/EMG payload %s (%zu bytes, hash %s)",
                                same1 ? "identical" : "DIFFERS", a1.size(), harness::hash_json(ex.erd().to_json(false)).c_str(),
                                same2 ? "identical" : "DIFFERS", a2.size(),
                                harness::hash_json(ex.ssvep().to_json(false)).c_str())};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::string only;
    std::string config_dir = std::string(TDN_SOURCE_DIR) + "/configs";
    std::string out;
    std::string reports;
    bool always_zero = false;
    app.add_option("--only", only, "comma-separated criterion numbers");
    app.add_option("--configs", config_dir, "directory holding acceptance_*.json");
    app.add_option("--out", out, "also write the verdict lines to this file");
    app.add_option("--reports", reports, "write the experiment reports below this directory");
    app.add_flag("--always-zero", always_zero, "exit 0 once every criterion was evaluated");
    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::warn);

    std::set<int> selected;
    if (only.empty()) {
        for (int i = 1; i <= 12; ++i) selected.insert(i);
    } else {
        std::stringstream ss(only);
        for (std::string tok; std::getline(ss, tok, ',');) selected.insert(std::stoi(tok));
    }

    Experiments ex(config_dir, reports);
    const std::map<int, std::pair<const char*, std::function<Verdict()>>> table{
        {1, {"reconstruction identity",
             [] {
                 const auto t0 = std::chrono::steady_clock::now();
                 const double e = criteria::reconstruction_identity(100, 1);
                 const double s = seconds_since(t0);
                 return Verdict{e < 1e-9 && s < 30.0,
                                strf("worst relative error %.3g over 1200 trials, %.1f s", e, s)};
             }}},
        {2, {"ICA source recovery",
             [] {
                 const auto t0 = std::chrono::steady_clock::now();
                 const double c = criteria::ica_recovery(50, 2);
                 const double s = seconds_since(t0);
                 return Verdict{c > 0.95 && s < 30.0, strf("mean |corr| %.5f over 50 mixtures, %.1f s", c, s)};
             }}},
        {3, {"gradient correctness",
             [] {
                 const auto t0 = std::chrono::steady_clock::now();
                 const double e = criteria::gradient_check(1e-5);
                 const double s = seconds_since(t0);
                 return Verdict{e < 1e-4 && s < 60.0, strf("worst blockwise relative error %.3g, %.1f s", e, s)};
             }}},
        {4, {"descent monotonicity",
             [] {
                 const auto t0 = std::chrono::steady_clock::now();
                 double worst = 0.0;
                 double first = 0.0;
                 double last = 0.0;
                 for (std::uint64_t seed = 1; seed <= 10; ++seed) {
                     const auto run = criteria::descent_run(seed, 50, 1e-4);
                     worst = std::max(worst, run.worst_increase);
                     first += run.first_loss / 10.0;
                     last += run.last_loss / 10.0;
                 }
                 const double s = seconds_since(t0);
                 return Verdict{worst <= 1e-8 && last < first && s < 300.0,
                                strf("largest half-step loss increase %.3g over 10 seeds x 50 iterations, "
                                     "mean loss %.6f -> %.6f, %.1f s",
                                     worst, first, last, s)};
             }}},
        {5, {"mixing exactness",
             [] {
                 const auto t0 = std::chrono::steady_clock::now();
                 const double e = criteria::mixing_exactness({-5.0, -2.5, 0.0, 2.5, 5.0}, 20, 5);
                 const double s = seconds_since(t0);
                 return Verdict{e < 1e-9 && s < 5.0, strf("worst |requested - measured| %.3g dB, %.2f s", e, s)};
             }}},
        {6, {"task-metric direction (ERD + EOG)", [&] { return criterion_6(ex); }}},
        {7, {"signal-quality direction (ERD + EOG)", [&] { return criterion_7(ex); }}},
        {8, {"selector beats random mixing (SSVEP)", [&] { return criterion_8(ex); }}},
        {9, {"component-probe trend", [&] { return criterion_9(ex); }}},
        {10, {"fundamental-frequency enhancement", [&] { return criterion_10(ex); }}},
        {11, {"Wilcoxon vs sign enumeration",
              [] {
                  const double e = criteria::wilcoxon_oracle(200, 11);
                  return Verdict{e <= 1e-12, strf("worst |p - p_enum| %.3g over 200 datasets, n <= 12", e)};
              }}},
        {12, {"determinism of reruns", [&] { return criterion_12(ex); }}},
    };

    std::ofstream file;
    if (!out.empty()) file.open(out);
    int failed = 0;
    int evaluated = 0;
    for (int id : selected) {
        const auto it = table.find(id);
        if (it == table.end()) {
            std::fprintf(stderr, "no criterion %d\n", id);
            return 2;
        }
        Verdict v;
        try {
            v = it->second.second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        ++evaluated;
        failed += v.pass ? 0 : 1;
        const std::string line = strf("%s %2d %s: ", v.pass ? "PASS" : "FAIL", id, it->second.first) + v.detail;
        std::printf("%s\n", line.c_str());
        std::fflush(stdout);
        if (file) file << line << '\n' << std::flush;
    }
    const std::string tail = strf("criteria evaluated: %d, passed: %d, failed: %d", evaluated, evaluated - failed, failed);
    std::printf("%s\n", tail.c_str());
    if (file) file << tail << '\n';
    return failed == 0 || always_zero ? 0 : 1;
}
