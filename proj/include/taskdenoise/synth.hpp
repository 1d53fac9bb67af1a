#pragma once
// Synthetic labeled datasets with clean ground truth, parametric EOG/EMG
// artifact templates, and exact-SNR mixing.

#include "taskdenoise/rng.hpp"
#include "taskdenoise/signal.hpp"

#include <string_view>
#include <vector>

namespace tdn::synth {

enum class Paradigm { SSVEP, ERD };
enum class NoiseKind { None, EOG, EMG };

std::string_view to_string(Paradigm p);
Paradigm parse_paradigm(std::string_view s);
std::string_view to_string(NoiseKind k);
NoiseKind parse_noise_kind(std::string_view s);

// 9.25 .. 14.75 Hz in 0.5 Hz steps.
std::vector<double> stimulus_grid();
// K frequencies spread evenly over the grid (both ends included when K >= 2).
std::vector<double> default_stimulus_freqs(int num_classes);

struct SynthConfig {
    Paradigm paradigm = Paradigm::SSVEP;
    std::size_t channels = 8;
    std::size_t samples = 512;
    double fs = 128.0;
    int num_classes = 2;
    std::size_t trials_per_class = 50;
    std::vector<double> stimulus_freqs;  // SSVEP; empty means default_stimulus_freqs(K)
    double signal_amp = 1.0;             // SSVEP tone or ERD rhythm amplitude
    double background_pink_noise_amp = 1.0;
    RngSeed seed{};

    void validate() const;
    std::vector<double> resolved_freqs() const;
};

// Trials ordered class-major: trials_per_class of class 0, then class 1, ...
TrialSet gen_dataset(const SynthConfig& cfg);

// Unit-RMS 1/f noise for one channel.
std::vector<double> pink_noise(std::size_t samples, double fs, Engine& eng);

Trial gen_artifact(NoiseKind kind, std::size_t channels, std::size_t samples, double fs, RngSeed seed);

struct NoiseSpec {
    NoiseKind kind = NoiseKind::None;
    double snr_lo = -5.0;
    double snr_hi = 5.0;

    void validate() const;
};

struct Mixed {
    Trial noisy;
    double lambda;
};

// noisy = x + lambda n with lambda = rms(x) / (rms(n) 10^(snr_db/20)).
Mixed mix_noise(const Trial& x, const Trial& n, double snr_db);

struct Contaminated {
    TrialSet noisy;
    std::vector<double> snr_db;  // per trial, requested
    std::vector<double> lambda;
};

// Draws one artifact template and one SNR per trial from per-trial derived seeds.
// kind None returns the input unchanged.
Contaminated contaminate(const TrialSet& clean, const NoiseSpec& spec, RngSeed seed);

}  // namespace tdn::synth
