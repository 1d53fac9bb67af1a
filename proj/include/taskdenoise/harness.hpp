#pragma once
// Cross-validated experiments: noisy baseline vs selector-denoised vs
// random-mixing control, plus the component-level probe.

#include "taskdenoise/decomposition.hpp"
#include "taskdenoise/metrics.hpp"
#include "taskdenoise/synth.hpp"
#include "taskdenoise/training.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tdn::harness {

struct SplitRatio {
    double train = 6.0;
    double val = 2.0;
    double test = 2.0;
};

struct ProbeConfig {
    bool enabled = false;
    DecompMethod method = DecompMethod::ICA;
    int bins = 10;
    int folds = 5;
    std::size_t min_bin_size = 10;
    int epochs = 30;
};

struct ExperimentConfig {
    std::string name = "experiment";
    // Exactly one source: synthetic (file empty) or a TDNSIG01 file.
    synth::SynthConfig synth{};
    std::filesystem::path data_file;
    synth::NoiseSpec noise{};
    std::vector<DecompMethod> methods{DecompMethod::ICA};
    train::TrainConfig train{};
    int folds = 5;
    SplitRatio ratio{};
    std::vector<std::uint64_t> seeds{1};
    ProbeConfig probe{};
    bool strict = true;
    int jobs = 1;
    std::filesystem::path output_dir = "out";

    void validate() const;
};

// Defaults per paradigm: 500/500 epochs for SSVEP, 50/50 for ERD.
ExperimentConfig default_config(synth::Paradigm paradigm);

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

// Per class: shuffle once, rotate by round(f * n_c / k) for fold f, then cut
// train/val/test by cumulative rounding of the ratio.
std::vector<Split> kfold_splits(std::size_t n_trials, const std::vector<int>& labels, int k, SplitRatio ratio,
                                RngSeed seed);

// X_tilde = sum_i u_i C_i with u_i ~ U[0, 1] i.i.d.
Trial random_mixing_control(const ComponentSet& cs, RngSeed seed);
Trial random_mixing_control(const ComponentSet& cs, const std::function<double()>& draw);

struct ProbeBin {
    int bin = 0;
    double p_lo = 0.0;  // smallest probability in the bin
    double p_hi = 0.0;  // largest probability in the bin
    std::size_t count = 0;
    bool skipped = false;
    std::optional<double> accuracy;
};

struct ProbeTable {
    std::vector<ProbeBin> bins;
    std::optional<double> spearman;
    std::size_t total_components = 0;
    // Numerically empty components (energy <= 1e-12 of the trial's) carry no
    // signal to classify and are left out of the bins.
    std::size_t excluded = 0;
};

// Bins components into probability deciles (quantile edges; ties share a
// bin) and scores each bin with a fresh classifier trained on the component
// matrices under the parent trial's label.
ProbeTable component_probe(const TrialSet& data, const std::vector<ComponentSet>& components,
                           const nn::ModelParams& params, const ProbeConfig& cfg, const train::TrainConfig& tcfg,
                           RngSeed seed);
ProbeTable component_probe(const TrialSet& data, const nn::ModelParams& params, const DecompConfig& dcfg,
                           const ProbeConfig& cfg, const train::TrainConfig& tcfg, RngSeed seed);

// Test-split outcome of one evaluator condition.
struct ConditionResult {
    metrics::ClassReport report;
    std::optional<metrics::SignalQuality> vs_clean;  // synthetic ground truth
    metrics::SignalQuality vs_raw;                   // pre-contamination input
    std::optional<double> fundamental_ratio;         // SSVEP
    std::optional<double> alpha_beta_ratio;          // ERD, attenuation window
};

struct MethodFold {
    DecompMethod method = DecompMethod::ICA;
    ConditionResult denoised;
    ConditionResult control;
    int best_epoch = -1;
    double best_val_loss = 0.0;
    double mean_retention = 0.0;
    std::size_t ica_unconverged = 0;
};

struct FoldResult {
    std::uint64_t seed = 0;
    int fold = 0;
    bool ok = false;
    std::string error;
    std::size_t n_train = 0;
    std::size_t n_val = 0;
    std::size_t n_test = 0;
    ConditionResult baseline;
    std::vector<MethodFold> methods;
};

struct MethodSummary {
    DecompMethod method = DecompMethod::ICA;
    // Means over all completed folds of all seeds.
    double acc_baseline = 0.0;
    double acc_denoised = 0.0;
    double acc_control = 0.0;
    double f1_baseline = 0.0;
    double f1_denoised = 0.0;
    double f1_control = 0.0;
    std::optional<double> snr_clean_noisy;
    std::optional<double> snr_clean_denoised;
    std::optional<double> snr_clean_control;
    std::optional<double> mse_clean_noisy;
    std::optional<double> mse_clean_denoised;
    double snr_raw_denoised = 0.0;
    double mse_raw_denoised = 0.0;
    std::optional<double> fundamental_noisy;
    std::optional<double> fundamental_denoised;
    std::optional<double> alpha_beta_noisy;
    std::optional<double> alpha_beta_denoised;
    std::size_t ica_unconverged = 0;
    // Per-seed fold means, in config seed order.
    std::vector<double> seed_acc_baseline;
    std::vector<double> seed_acc_denoised;
    std::vector<double> seed_acc_control;
    std::vector<double> seed_snr_noisy;
    std::vector<double> seed_snr_denoised;
    std::vector<double> seed_mse_noisy;
    std::vector<double> seed_mse_denoised;
    std::vector<double> seed_fundamental_noisy;
    std::vector<double> seed_fundamental_denoised;
    // Paired across seeds, or across folds when there is a single seed.
    std::optional<metrics::TestResult> test_acc_denoised_vs_baseline;
    std::optional<metrics::TestResult> test_acc_denoised_vs_control;
    std::optional<metrics::TestResult> test_snr_denoised_vs_noisy;
};

struct SeedProbe {
    std::uint64_t seed = 0;
    DecompMethod method = DecompMethod::ICA;
    ProbeTable table;
};

// Mean one-sided PSD over test trials and channels, accumulated over folds.
struct SpectrumAccumulator {
    std::vector<double> freqs;
    std::vector<double> clean;
    std::vector<double> noisy;
    std::vector<double> denoised;
    std::size_t count = 0;
};

struct EvalReport {
    nlohmann::json config;
    std::string config_hash;
    std::string created_at;
    std::vector<FoldResult> folds;
    std::vector<MethodSummary> summaries;
    std::vector<SeedProbe> probes;
    std::vector<SpectrumAccumulator> spectra;  // one per method
    std::size_t aborted = 0;
    bool failed = false;

    const MethodSummary& summary(DecompMethod m) const;

    // With include_volatile = false the timestamp is omitted, so two runs of
    // the same config compare equal byte for byte.
    nlohmann::json to_json(bool include_volatile = true) const;
    // report.json, summary.csv, folds.csv, psd_<method>.csv, probe.csv
    void write(const std::filesystem::path& dir) const;
};

EvalReport run_experiment(const ExperimentConfig& cfg);

// Hex FNV-1a 64 of the compact JSON dump.
std::string hash_json(const nlohmann::json& j);

}  // namespace tdn::harness
