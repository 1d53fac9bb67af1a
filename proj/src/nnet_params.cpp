#include "taskdenoise/error.hpp"
#include "taskdenoise/kernels.hpp"
#include "taskdenoise/nnet.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

namespace tdn::nn {

std::string_view to_string(Arch a) { return a == Arch::BandPowerMLP ? "band_power_mlp" : "compact_cnn"; }

Arch parse_arch(std::string_view s) {
    if (s == "band_power_mlp" || s == "bandpower" || s == "mlp") return Arch::BandPowerMLP;
    if (s == "compact_cnn" || s == "cnn") return Arch::CompactCNN;
    throw ValidationError("unknown architecture '" + std::string(s) + "'");
}

std::string_view to_string(Block b) {
    switch (b) {
        case Block::Extractor: return "extractor";
        case Block::Selector: return "selector";
        case Block::Classifier: return "classifier";
    }
    return "?";
}

std::shared_ptr<const SpectralBasis> spectral_basis(std::size_t samples, double fs) {
    static std::mutex mu;
    static std::map<std::pair<std::size_t, double>, std::shared_ptr<const SpectralBasis>> cache;
    std::lock_guard lock(mu);
    auto key = std::make_pair(samples, fs);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    auto basis = std::make_shared<SpectralBasis>();
    basis->samples = samples;
    basis->fs = fs;
    std::vector<std::size_t> ks;
    std::vector<int> band_of;
    for (std::size_t k = 1; k <= samples / 2; ++k) {
        const double f = static_cast<double>(k) * fs / static_cast<double>(samples);
        for (std::size_t j = 0; j < kBands.size(); ++j) {
            const bool last = j + 1 == kBands.size();
            if (f >= kBands[j].lo && (f < kBands[j].hi || (last && f <= kBands[j].hi))) {
                ks.push_back(k);
                band_of.push_back(static_cast<int>(j));
                basis->freqs.push_back(f);
                break;
            }
        }
    }
    for (std::size_t j = 0; j < kBands.size(); ++j) {
        std::size_t begin = ks.size();
        std::size_t end = ks.size();
        for (std::size_t b = 0; b < ks.size(); ++b) {
            if (band_of[b] == static_cast<int>(j)) {
                if (begin == ks.size()) begin = b;
                end = b + 1;
            }
        }
        if (begin == ks.size()) begin = end = 0;
        basis->ranges[j] = {begin, end};
    }
    const auto nb = static_cast<Eigen::Index>(ks.size());
    const auto t_len = static_cast<Eigen::Index>(samples);
    basis->cos_rows.resize(nb, t_len);
    basis->sin_rows.resize(nb, t_len);
    for (Eigen::Index b = 0; b < nb; ++b) {
        for (Eigen::Index t = 0; t < t_len; ++t) {
            const auto phase = (ks[static_cast<std::size_t>(b)] * static_cast<std::size_t>(t)) % samples;
            const double ang = 2.0 * std::numbers::pi * static_cast<double>(phase) / static_cast<double>(samples);
            basis->cos_rows(b, t) = std::cos(ang);
            basis->sin_rows(b, t) = std::sin(ang);
        }
    }
    cache.emplace(key, basis);
    return basis;
}

std::size_t cnn_kernel_length(double fs) {
    auto len = static_cast<std::size_t>(std::lround(fs / 2.0));
    if (len < 1) len = 1;
    if (len % 2 == 0) ++len;
    return len;
}

namespace {

struct LayoutBuilder {
    ParamBlock& block;
    void weight(std::string name, std::size_t rows, std::size_t cols) {
        block.weights.push_back({std::move(name), block.values.size(), rows, cols});
        block.values.resize(block.values.size() + rows * cols, 0.0);
    }
    void bias(std::string name, std::size_t n) {
        block.biases.push_back({std::move(name), block.values.size(), 1, n});
        block.values.resize(block.values.size() + n, 0.0);
    }
};

void fill_uniform(ParamBlock& blk, const Slot& s, double bound, Engine& eng) {
    for (std::size_t i = 0; i < s.size(); ++i) blk.values[s.offset + i] = uniform(eng, -bound, bound);
}

}  // namespace

void ModelParams::finish_layout() {
    const auto& g = geom_;
    if (g.channels < 1 || g.samples < 2 || !(g.fs > 0.0)) throw ValidationError("invalid model geometry");
    if (g.num_classes < 2) throw ValidationError("model needs at least two classes");
    if (arch_ == Arch::BandPowerMLP) {
        basis_ = spectral_basis(g.samples, g.fs);
        feature_width_ = kMlpFeatures;
    } else {
        const std::size_t p2 = (g.samples / kCnnPool) / kCnnPool;
        if (p2 < 1) {
            throw ValidationError("CompactCNN needs at least " + std::to_string(kCnnPool * kCnnPool) + " samples");
        }
        feature_width_ = kCnnMaps * p2;
    }
}

ModelParams ModelParams::init(Arch arch, Geometry geom, RngSeed seed) {
    ModelParams p;
    p.arch_ = arch;
    p.geom_ = geom;
    p.finish_layout();
    const std::size_t c = geom.channels;
    const std::size_t f = p.feature_width_;
    const auto k = static_cast<std::size_t>(geom.num_classes);

    auto& ext = p.blocks_[0];
    LayoutBuilder eb{ext};
    auto eng = make_engine(derive(seed, 0));
    if (arch == Arch::BandPowerMLP) {
        const std::size_t in = c * kBands.size();
        eb.weight("hidden.weight", kMlpHidden, in);
        eb.bias("hidden.bias", kMlpHidden);
        eb.weight("out.weight", kMlpFeatures, kMlpHidden);
        eb.bias("out.bias", kMlpFeatures);
        fill_uniform(ext, ext.weights[0], std::sqrt(6.0 / static_cast<double>(in + kMlpHidden)), eng);
        fill_uniform(ext, ext.weights[1], std::sqrt(6.0 / static_cast<double>(kMlpHidden + kMlpFeatures)), eng);
        p.feat_mean_ = Vec::Zero(static_cast<Eigen::Index>(in));
        p.feat_scale_ = Vec::Ones(static_cast<Eigen::Index>(in));
    } else {
        const std::size_t len = cnn_kernel_length(geom.fs);
        eb.weight("temporal.weight", kCnnTemporalFilters, len);
        eb.weight("spatial.weight", kCnnMaps, c);
        eb.bias("spatial.bias", kCnnMaps);
        eb.weight("pointwise.weight", kCnnMaps, kCnnMaps);
        eb.bias("pointwise.bias", kCnnMaps);
        fill_uniform(ext, ext.weights[0], std::sqrt(3.0 / static_cast<double>(len)), eng);
        fill_uniform(ext, ext.weights[1], std::sqrt(3.0 / static_cast<double>(c)), eng);
        fill_uniform(ext, ext.weights[2], std::sqrt(3.0 / static_cast<double>(kCnnMaps)), eng);
    }

    LayoutBuilder sb{p.blocks_[1]};
    sb.weight("selector.weight", 1, f);
    sb.bias("selector.bias", 1);
    auto seng = make_engine(derive(seed, 1));
    fill_uniform(p.blocks_[1], p.blocks_[1].weights[0], 0.01, seng);
    p.blocks_[1].values[p.blocks_[1].biases[0].offset] = 2.0;

    LayoutBuilder cb{p.blocks_[2]};
    cb.weight("classifier.weight", k, f);
    cb.bias("classifier.bias", k);
    auto ceng = make_engine(derive(seed, 2));
    fill_uniform(p.blocks_[2], p.blocks_[2].weights[0], std::sqrt(3.0 / static_cast<double>(f)), ceng);
    return p;
}

ModelParams ModelParams::from_parts(Arch arch, Geometry geom, std::array<ParamBlock, kBlockCount> blocks,
                                    Vec feat_mean, Vec feat_scale, double power_floor) {
    ModelParams ref = init(arch, geom, RngSeed{0});
    for (int b = 0; b < kBlockCount; ++b) {
        const auto& want = ref.blocks_[b];
        const auto& got = blocks[b];
        if (got.values.size() != want.values.size()) {
            throw FormatError("block " + std::string(to_string(static_cast<Block>(b))) + " has " +
                              std::to_string(got.values.size()) + " values, expected " +
                              std::to_string(want.values.size()));
        }
        for (double v : got.values) {
            if (!std::isfinite(v)) throw ValidationError("non-finite parameter in checkpoint");
        }
        ref.blocks_[b].values = got.values;
    }
    if (arch == Arch::BandPowerMLP) ref.set_standardization(std::move(feat_mean), std::move(feat_scale), power_floor);
    return ref;
}

const Slot& ModelParams::slot(Block b, std::string_view name) const {
    const auto& blk = block(b);
    for (const auto& s : blk.weights) {
        if (s.name == name) return s;
    }
    for (const auto& s : blk.biases) {
        if (s.name == name) return s;
    }
    throw ValidationError("no parameter slot named " + std::string(name));
}

void ModelParams::set_standardization(Vec mean, Vec scale, double power_floor) {
    const auto in = static_cast<Eigen::Index>(geom_.channels * kBands.size());
    if (mean.size() != in || scale.size() != in) throw ValidationError("standardization width mismatch");
    if (!(power_floor > 0.0)) throw ValidationError("power floor must be positive");
    feat_mean_ = std::move(mean);
    feat_scale_ = std::move(scale);
    power_floor_ = power_floor;
    ++revision_;
}

bool ModelParams::operator==(const ModelParams& o) const {
    if (arch_ != o.arch_ || geom_.channels != o.geom_.channels || geom_.samples != o.geom_.samples ||
        geom_.fs != o.geom_.fs || geom_.num_classes != o.geom_.num_classes) {
        return false;
    }
    for (int b = 0; b < kBlockCount; ++b) {
        if (blocks_[b].values != o.blocks_[b].values) return false;
    }
    return feat_mean_ == o.feat_mean_ && feat_scale_ == o.feat_scale_ && power_floor_ == o.power_floor_;
}

Gradients Gradients::zeros_like(const ModelParams& p, std::array<bool, kBlockCount> which) {
    Gradients g;
    for (int b = 0; b < kBlockCount; ++b) {
        g.present[b] = which[b];
        if (which[b]) g.g[b].assign(p.block(static_cast<Block>(b)).values.size(), 0.0);
    }
    return g;
}

double Gradients::global_norm() const {
    double s = 0.0;
    for (int b = 0; b < kBlockCount; ++b) {
        if (present[b]) s += kernels::sum_sq(g[b]);
    }
    return std::sqrt(s);
}

void Gradients::add(const Gradients& o) {
    for (int b = 0; b < kBlockCount; ++b) {
        if (!o.present[b]) continue;
        if (!present[b]) {
            g[b] = o.g[b];
            present[b] = true;
        } else {
            kernels::axpy(1.0, o.g[b], g[b]);
        }
    }
}

FreezeMask FreezeMask::only(Block trainable) {
    FreezeMask m;
    m.frozen = {true, true, true};
    m.frozen[static_cast<int>(trainable)] = false;
    return m;
}

FreezeMask FreezeMask::all_but(std::initializer_list<Block> trainable) {
    FreezeMask m;
    m.frozen = {true, true, true};
    for (auto b : trainable) m.frozen[static_cast<int>(b)] = false;
    return m;
}

}  // namespace tdn::nn
