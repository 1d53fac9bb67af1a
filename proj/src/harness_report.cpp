#include "taskdenoise/harness.hpp"

#include "taskdenoise/error.hpp"
#include "taskdenoise/kernels.hpp"

#include <Eigen/Core>
#include <fftw3.h>

#include <cmath>
#include <fstream>

#ifndef TASKDENOISE_VERSION
#define TASKDENOISE_VERSION "0.0.0"
#endif

namespace tdn::harness {

using nlohmann::json;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

json nums(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

json quality(const metrics::SignalQuality& q) { return {{"mse", num(q.mse)}, {"snr_db", num(q.snr_db)}}; }

json class_report(const metrics::ClassReport& r) {
    return {{"accuracy", num(r.accuracy)},
            {"macro_precision", num(r.macro_precision)},
            {"macro_recall", num(r.macro_recall)},
            {"macro_f1", num(r.macro_f1)},
            {"precision", nums(r.precision)},
            {"recall", nums(r.recall)},
            {"f1", nums(r.f1)},
            {"support", r.support},
            {"zero_division", r.zero_division},
            {"confusion", r.confusion}};
}

json condition(const ConditionResult& c) {
    return {{"report", class_report(c.report)},
            {"vs_clean", c.vs_clean ? quality(*c.vs_clean) : json(nullptr)},
            {"vs_raw", quality(c.vs_raw)},
            {"fundamental_ratio", num(c.fundamental_ratio)},
            {"alpha_beta_ratio", num(c.alpha_beta_ratio)}};
}

json test(const std::optional<metrics::TestResult>& t) {
    if (!t) return nullptr;
    return {{"statistic", num(t->statistic)},
            {"w_plus", num(t->w_plus)},
            {"p_value", num(t->p_value)},
            {"n_effective", t->n_effective},
            {"method", metrics::to_string(t->method)}};
}

json summary_json(const MethodSummary& s) {
    return {{"method", to_string(s.method)},
            {"accuracy", {{"baseline", num(s.acc_baseline)}, {"denoised", num(s.acc_denoised)}, {"control", num(s.acc_control)}}},
            {"macro_f1", {{"baseline", num(s.f1_baseline)}, {"denoised", num(s.f1_denoised)}, {"control", num(s.f1_control)}}},
            {"snr_vs_clean",
             {{"noisy", num(s.snr_clean_noisy)}, {"denoised", num(s.snr_clean_denoised)}, {"control", num(s.snr_clean_control)}}},
            {"mse_vs_clean", {{"noisy", num(s.mse_clean_noisy)}, {"denoised", num(s.mse_clean_denoised)}}},
            {"vs_raw", {{"snr_db", num(s.snr_raw_denoised)}, {"mse", num(s.mse_raw_denoised)}}},
            {"fundamental_ratio", {{"noisy", num(s.fundamental_noisy)}, {"denoised", num(s.fundamental_denoised)}}},
            {"alpha_beta_ratio", {{"noisy", num(s.alpha_beta_noisy)}, {"denoised", num(s.alpha_beta_denoised)}}},
            {"ica_unconverged", s.ica_unconverged},
            {"per_seed",
             {{"acc_baseline", nums(s.seed_acc_baseline)},
              {"acc_denoised", nums(s.seed_acc_denoised)},
              {"acc_control", nums(s.seed_acc_control)},
              {"snr_noisy", nums(s.seed_snr_noisy)},
              {"snr_denoised", nums(s.seed_snr_denoised)},
              {"mse_noisy", nums(s.seed_mse_noisy)},
              {"mse_denoised", nums(s.seed_mse_denoised)},
              {"fundamental_noisy", nums(s.seed_fundamental_noisy)},
              {"fundamental_denoised", nums(s.seed_fundamental_denoised)}}},
            {"tests",
             {{"acc_denoised_vs_baseline", test(s.test_acc_denoised_vs_baseline)},
              {"acc_denoised_vs_control", test(s.test_acc_denoised_vs_control)},
              {"snr_denoised_vs_noisy", test(s.test_snr_denoised_vs_noisy)}}}};
}

json probe(const SeedProbe& p) {
    json bins = json::array();
    for (const auto& b : p.table.bins) {
        bins.push_back({{"bin", b.bin},
                        {"p_lo", num(b.p_lo)},
                        {"p_hi", num(b.p_hi)},
                        {"count", b.count},
                        {"skipped", b.skipped},
                        {"accuracy", num(b.accuracy)}});
    }
    return {{"seed", p.seed},
            {"method", to_string(p.method)},
            {"total_components", p.table.total_components},
            {"excluded", p.table.excluded},
            {"spearman", num(p.table.spearman)},
            {"bins", bins}};
}

std::string csv_num(double v) {
    if (!std::isfinite(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string csv_num(const std::optional<double>& v) { return v ? csv_num(*v) : ""; }

std::string csv_snr(const std::optional<metrics::SignalQuality>& q) { return q ? csv_num(q->snr_db) : ""; }
std::string csv_mse(const std::optional<metrics::SignalQuality>& q) { return q ? csv_num(q->mse) : ""; }

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

}  // namespace

json EvalReport::to_json(bool include_volatile) const {
    json fold_list = json::array();
    for (const auto& f : folds) {
        json methods = json::array();
        for (const auto& m : f.methods) {
            methods.push_back({{"method", to_string(m.method)},
                               {"denoised", condition(m.denoised)},
                               {"control", condition(m.control)},
                               {"best_epoch", m.best_epoch},
                               {"best_val_loss", num(m.best_val_loss)},
                               {"mean_retention", num(m.mean_retention)},
                               {"ica_unconverged", m.ica_unconverged}});
        }
        json fj = {{"seed", f.seed},
                   {"fold", f.fold},
                   {"ok", f.ok},
                   {"error", f.ok ? json(nullptr) : json(f.error)},
                   {"sizes", {{"train", f.n_train}, {"val", f.n_val}, {"test", f.n_test}}},
                   {"baseline", f.ok ? condition(f.baseline) : json(nullptr)},
                   {"methods", methods}};
        fold_list.push_back(std::move(fj));
    }
    json agg = json::array();
    for (const auto& s : summaries) agg.push_back(summary_json(s));
    json probe_list = json::array();
    for (const auto& p : probes) probe_list.push_back(probe(p));

    json j = {{"schema_version", 1},
              {"name", config.value("name", "")},
              {"status", failed ? "failed" : "ok"},
              {"aborted_folds", aborted},
              {"provenance",
               {{"config_hash", config_hash},
                {"seeds", config.value("seeds", json::array())},
                {"version", TASKDENOISE_VERSION},
                {"compiler", __VERSION__},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"fftw", std::string(fftw_version)},
                {"simd", std::string(kernels::active().name)}}},
              {"config", config},
              {"folds", fold_list},
              {"aggregate", agg},
              {"probes", probe_list}};
    if (include_volatile) j["created_at"] = created_at;
    return j;
}

void EvalReport::write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    open_out(dir / "report.json") << to_json(true).dump(2) << '\n';

    auto summary_csv = open_out(dir / "summary.csv");
    summary_csv << "method,condition,accuracy,macro_f1,snr_vs_clean_db,mse_vs_clean\n";
    for (const auto& s : summaries) {
        const std::string m(to_string(s.method));
        summary_csv << m << ",noisy," << csv_num(s.acc_baseline) << ',' << csv_num(s.f1_baseline) << ','
                    << csv_num(s.snr_clean_noisy) << ',' << csv_num(s.mse_clean_noisy) << '\n';
        summary_csv << m << ",denoised," << csv_num(s.acc_denoised) << ',' << csv_num(s.f1_denoised) << ','
                    << csv_num(s.snr_clean_denoised) << ',' << csv_num(s.mse_clean_denoised) << '\n';
        summary_csv << m << ",random_mixing," << csv_num(s.acc_control) << ',' << csv_num(s.f1_control) << ','
                    << csv_num(s.snr_clean_control) << ",\n";
    }

    auto folds_csv = open_out(dir / "folds.csv");
    folds_csv << "seed,fold,method,ok,acc_noisy,acc_denoised,acc_control,snr_noisy_db,snr_denoised_db,mse_noisy,"
                 "mse_denoised,mean_retention,best_epoch\n";
    for (const auto& f : folds) {
        if (!f.ok) {
            folds_csv << f.seed << ',' << f.fold << ",,0,,,,,,,,,\n";
            continue;
        }
        for (const auto& m : f.methods) {
            folds_csv << f.seed << ',' << f.fold << ',' << to_string(m.method) << ",1,"
                      << csv_num(f.baseline.report.accuracy) << ',' << csv_num(m.denoised.report.accuracy) << ','
                      << csv_num(m.control.report.accuracy) << ',' << csv_snr(f.baseline.vs_clean) << ','
                      << csv_snr(m.denoised.vs_clean) << ',' << csv_mse(f.baseline.vs_clean) << ','
                      << csv_mse(m.denoised.vs_clean) << ',' << csv_num(m.mean_retention) << ',' << m.best_epoch
                      << '\n';
        }
    }

    for (std::size_t i = 0; i < spectra.size() && i < summaries.size(); ++i) {
        const auto& sp = spectra[i];
        if (sp.freqs.empty()) continue;
        auto out = open_out(dir / ("psd_" + std::string(to_string(summaries[i].method)) + ".csv"));
        out << "freq_hz,clean,noisy,denoised\n";
        for (std::size_t k = 0; k < sp.freqs.size(); ++k) {
            out << csv_num(sp.freqs[k]) << ',' << (sp.clean.empty() ? "" : csv_num(sp.clean[k])) << ','
                << csv_num(sp.noisy[k]) << ',' << csv_num(sp.denoised[k]) << '\n';
        }
    }

    if (!probes.empty()) {
        auto out = open_out(dir / "probe.csv");
        out << "seed,method,bin,p_lo,p_hi,count,skipped,accuracy\n";
        for (const auto& p : probes) {
            for (const auto& b : p.table.bins) {
                out << p.seed << ',' << to_string(p.method) << ',' << b.bin << ',' << csv_num(b.p_lo) << ','
                    << csv_num(b.p_hi) << ',' << b.count << ',' << (b.skipped ? 1 : 0) << ',' << csv_num(b.accuracy)
                    << '\n';
            }
        }
    }
}

}  // namespace tdn::harness
