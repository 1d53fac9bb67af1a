#include "taskdenoise/synth.hpp"

#include "taskdenoise/error.hpp"
#include "taskdenoise/metrics.hpp"

#include "fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <random>

namespace tdn::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kBlinkWidthS = 0.3;
constexpr double kErdAttenuation = 0.4;

std::size_t third(std::size_t c) { return (c + 2) / 3; }

void normalize_rms(std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    const double r = std::sqrt(s / static_cast<double>(v.size()));
    if (r > 0.0)
        for (double& x : v) x /= r;
}

std::vector<double> white(std::size_t n, Engine& eng) {
    std::vector<double> v(n);
    for (double& x : v) x = normal(eng);
    return v;
}

std::vector<double> bandpassed(std::size_t n, double fs, double lo, double hi, Engine& eng) {
    auto v = fft::shape_spectrum(white(n, eng), fs, [=](double f) { return (f >= lo && f <= hi) ? 1.0 : 0.0; });
    normalize_rms(v);
    return v;
}

// Smooth profile: 1.0 on the last third of the channels, falling off with distance.
std::vector<double> occipital_gains(std::size_t c) {
    std::vector<double> g(c);
    const std::size_t first = c - third(c);
    for (std::size_t i = 0; i < c; ++i) {
        const double d = i >= first ? 0.0 : static_cast<double>(first - i);
        g[i] = std::max(0.1, std::exp(-0.5 * d * d / 2.0));
    }
    return g;
}

std::vector<double> frontal_gains(std::size_t c) {
    std::vector<double> g(c, 1.0);
    const std::size_t n = third(c);
    if (c <= n) return g;
    const std::size_t rest = c - n;
    for (std::size_t i = 0; i < rest; ++i) {
        g[n + i] = 1.0 - 0.9 * static_cast<double>(i + 1) / static_cast<double>(rest);
    }
    return g;
}

Mat background(const SynthConfig& cfg, Engine& eng) {
    Mat m(static_cast<Eigen::Index>(cfg.channels), static_cast<Eigen::Index>(cfg.samples));
    for (Eigen::Index c = 0; c < m.rows(); ++c) {
        const auto p = pink_noise(cfg.samples, cfg.fs, eng);
        for (Eigen::Index t = 0; t < m.cols(); ++t) m(c, t) = cfg.background_pink_noise_amp * p[static_cast<std::size_t>(t)];
    }
    return m;
}

Mat ssvep_trial(const SynthConfig& cfg, double f, Engine& eng) {
    const auto gains = occipital_gains(cfg.channels);
    const double phase = uniform(eng, 0.0, kTwoPi);
    const double phase2 = uniform(eng, 0.0, kTwoPi);
    Mat bg = background(cfg, eng);
    for (std::size_t t = 0; t < cfg.samples; ++t) {
        const double tt = static_cast<double>(t) / cfg.fs;
        const double s = cfg.signal_amp * (std::sin(kTwoPi * f * tt + phase) + 0.4 * std::sin(kTwoPi * 2.0 * f * tt + phase2));
        for (std::size_t c = 0; c < cfg.channels; ++c) {
            bg(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) += gains[c] * s;
        }
    }
    return bg;
}

// Class 0 attenuates the second group, class 1 the first, class 2 both.
Mat erd_trial(const SynthConfig& cfg, int label, Engine& eng) {
    const std::size_t g = third(cfg.channels);
    const std::size_t groups[2][2] = {{0, g}, {g, std::min(2 * g, cfg.channels)}};
    const bool attenuate[2] = {label == 1 || label == 2, label == 0 || label == 2};
    Mat x = background(cfg, eng);
    const std::size_t a0 = cfg.samples / 4;
    const std::size_t a1 = 3 * cfg.samples / 4;
    for (int grp = 0; grp < 2; ++grp) {
        const auto rhythm = bandpassed(cfg.samples, cfg.fs, 8.0, 12.0, eng);
        for (std::size_t c = 0; c < cfg.channels; ++c) {
            const bool inside = c >= groups[grp][0] && c < groups[grp][1];
            const double gain = inside ? 1.0 : 0.2;
            for (std::size_t t = 0; t < cfg.samples; ++t) {
                const double env = (attenuate[grp] && t >= a0 && t < a1) ? kErdAttenuation : 1.0;
                x(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) += cfg.signal_amp * gain * env * rhythm[t];
            }
        }
    }
    return x;
}

}  // namespace

std::string_view to_string(Paradigm p) { return p == Paradigm::SSVEP ? "ssvep" : "erd"; }

Paradigm parse_paradigm(std::string_view s) {
    if (s == "ssvep") return Paradigm::SSVEP;
    if (s == "erd") return Paradigm::ERD;
    throw ValidationError("unknown paradigm '" + std::string(s) + "'");
}

std::string_view to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::None: return "none";
        case NoiseKind::EOG: return "eog";
        case NoiseKind::EMG: return "emg";
    }
    return "?";
}

NoiseKind parse_noise_kind(std::string_view s) {
    if (s == "none") return NoiseKind::None;
    if (s == "eog") return NoiseKind::EOG;
    if (s == "emg") return NoiseKind::EMG;
    throw ValidationError("unknown noise kind '" + std::string(s) + "'");
}

std::vector<double> stimulus_grid() {
    std::vector<double> g;
    for (int i = 0; i < 12; ++i) g.push_back(9.25 + 0.5 * i);
    return g;
}

std::vector<double> default_stimulus_freqs(int num_classes) {
    const auto grid = stimulus_grid();
    if (num_classes < 2 || num_classes > static_cast<int>(grid.size())) {
        throw ValidationError("default stimulus grid supports 2..12 classes");
    }
    std::vector<double> f;
    const double span = static_cast<double>(grid.size() - 1);
    for (int k = 0; k < num_classes; ++k) {
        f.push_back(grid[static_cast<std::size_t>(std::lround(k * span / (num_classes - 1)))]);
    }
    return f;
}

void SynthConfig::validate() const {
    if (channels < 1) throw ValidationError("synth: need at least one channel");
    if (samples < 2) throw ValidationError("synth: need at least two samples");
    if (!(fs > 0.0)) throw ValidationError("synth: fs must be positive");
    if (num_classes < 2) throw ValidationError("synth: need K >= 2");
    if (trials_per_class < 1) throw ValidationError("synth: need at least one trial per class");
    if (!(background_pink_noise_amp >= 0.0) || !(signal_amp >= 0.0)) throw ValidationError("synth: negative amplitude");
    if (paradigm == Paradigm::SSVEP) {
        const auto f = resolved_freqs();
        if (static_cast<int>(f.size()) != num_classes) throw ValidationError("synth: need one stimulus frequency per class");
        for (double v : f) {
            if (!(v > 0.0) || v >= fs / 2.0) throw ValidationError("synth: stimulus frequency must lie in (0, fs/2)");
        }
    } else {
        if (num_classes > 3) throw ValidationError("synth: ERD paradigm supports 2 or 3 classes");
        if (channels < 2) throw ValidationError("synth: ERD needs at least two channels");
        if (samples < 8) throw ValidationError("synth: ERD needs at least 8 samples");
    }
}

std::vector<double> SynthConfig::resolved_freqs() const {
    return stimulus_freqs.empty() ? default_stimulus_freqs(num_classes) : stimulus_freqs;
}

std::vector<double> pink_noise(std::size_t samples, double fs, Engine& eng) {
    auto v = fft::shape_spectrum(white(samples, eng), fs, [](double f) { return f > 0.0 ? 1.0 / std::sqrt(f) : 0.0; });
    normalize_rms(v);
    return v;
}

TrialSet gen_dataset(const SynthConfig& cfg) {
    cfg.validate();
    const auto freqs = cfg.paradigm == Paradigm::SSVEP ? cfg.resolved_freqs() : std::vector<double>{};
    std::vector<Trial> trials;
    std::vector<int> labels;
    std::size_t index = 0;
    for (int k = 0; k < cfg.num_classes; ++k) {
        for (std::size_t r = 0; r < cfg.trials_per_class; ++r, ++index) {
            Engine eng = make_engine(derive(cfg.seed, index));
            Mat x = cfg.paradigm == Paradigm::SSVEP ? ssvep_trial(cfg, freqs[static_cast<std::size_t>(k)], eng)
                                                    : erd_trial(cfg, k, eng);
            trials.emplace_back(std::move(x), cfg.fs);
            labels.push_back(k);
        }
    }
    return TrialSet(std::move(trials), std::move(labels), cfg.num_classes,
                    std::string(to_string(cfg.paradigm)) + "-" + std::to_string(cfg.seed.value));
}

Trial gen_artifact(NoiseKind kind, std::size_t channels, std::size_t samples, double fs, RngSeed seed) {
    if (channels < 1 || samples < 2 || !(fs > 0.0)) throw ValidationError("gen_artifact: invalid geometry");
    Engine eng = make_engine(seed);
    std::vector<double> source(samples, 0.0);
    std::vector<double> gains;
    if (kind == NoiseKind::EOG) {
        const auto width = static_cast<std::size_t>(std::lround(kBlinkWidthS * fs));
        if (width < 2 || width > samples) {
            throw ValidationError("gen_artifact: trial of " + std::to_string(samples) + " samples is too short for a " +
                                  std::to_string(width) + "-sample blink");
        }
        std::vector<double> walk(samples);
        double acc = 0.0;
        for (double& w : walk) w = (acc += normal(eng));
        walk = fft::shape_spectrum(walk, fs, [](double f) { return (f >= 0.1 && f <= 3.0) ? 1.0 : 0.0; });
        normalize_rms(walk);
        const int blinks = std::uniform_int_distribution<int>(1, 3)(eng);
        std::vector<double> pulses(samples, 0.0);
        for (int b = 0; b < blinks; ++b) {
            const auto start = std::uniform_int_distribution<std::size_t>(0, samples - width)(eng);
            const double amp = uniform(eng, 3.0, 5.0);
            for (std::size_t i = 0; i < width; ++i) {
                const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(width) - 0.5;
                pulses[start + i] += amp * std::cos(std::numbers::pi * u);
            }
        }
        for (std::size_t t = 0; t < samples; ++t) source[t] = walk[t] + pulses[t];
        gains = frontal_gains(channels);
    } else if (kind == NoiseKind::EMG) {
        const auto carrier = bandpassed(samples, fs, 20.0, 45.0, eng);
        std::vector<double> env(samples, 0.0);
        const int bursts = std::uniform_int_distribution<int>(2, 5)(eng);
        for (int b = 0; b < bursts; ++b) {
            const double dur = uniform(eng, 0.2, 0.6) * fs;
            const double centre = uniform(eng, 0.0, static_cast<double>(samples));
            const double amp = uniform(eng, 0.5, 1.5);
            for (std::size_t t = 0; t < samples; ++t) {
                const double u = (static_cast<double>(t) - centre) / dur;
                if (std::abs(u) < 0.5) env[t] += amp * 0.5 * (1.0 + std::cos(kTwoPi * u));
            }
        }
        for (std::size_t t = 0; t < samples; ++t) source[t] = env[t] * carrier[t];
        gains.resize(channels);
        for (double& g : gains) g = uniform(eng, 0.3, 1.0);
    } else {
        throw ValidationError("gen_artifact: kind must be eog or emg");
    }
    Mat m(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(samples));
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t t = 0; t < samples; ++t) {
            m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = gains[c] * source[t];
        }
    }
    return Trial(std::move(m), fs);
}

void NoiseSpec::validate() const {
    if (!std::isfinite(snr_lo) || !std::isfinite(snr_hi) || snr_lo > snr_hi) {
        throw ValidationError("noise SNR range must be finite with lower <= upper");
    }
}

Mixed mix_noise(const Trial& x, const Trial& n, double snr_db) {
    if (x.channels() != n.channels() || x.samples() != n.samples()) throw ValidationError("mix_noise: shape mismatch");
    if (!std::isfinite(snr_db)) throw ValidationError("mix_noise: SNR must be finite");
    const double rx = metrics::rms(x.data());
    const double rn = metrics::rms(n.data());
    if (rx == 0.0 || rn == 0.0) throw ValidationError("mix_noise: zero-RMS input");
    const double lambda = rx / (rn * std::pow(10.0, snr_db / 20.0));
    Mat noisy = x.data() + lambda * n.data();
    return Mixed{Trial(std::move(noisy), x.fs()), lambda};
}

Contaminated contaminate(const TrialSet& clean, const NoiseSpec& spec, RngSeed seed) {
    spec.validate();
    Contaminated out{clean, {}, {}};
    if (spec.kind == NoiseKind::None) {
        out.snr_db.assign(clean.size(), std::numeric_limits<double>::infinity());
        out.lambda.assign(clean.size(), 0.0);
        return out;
    }
    std::vector<Trial> noisy;
    noisy.reserve(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const RngSeed ts = derive(seed, i);
        Engine eng = make_engine(derive(ts, 1));
        const double snr = spec.snr_lo == spec.snr_hi ? spec.snr_lo : uniform(eng, spec.snr_lo, spec.snr_hi);
        const Trial n = gen_artifact(spec.kind, clean.channels(), clean.samples(), clean.fs(), derive(ts, 0));
        Mixed m = mix_noise(clean.trial(i), n, snr);
        out.snr_db.push_back(snr);
        out.lambda.push_back(m.lambda);
        noisy.push_back(std::move(m.noisy));
    }
    out.noisy = clean.with_trials(std::move(noisy));
    return out;
}

}  // namespace tdn::synth
