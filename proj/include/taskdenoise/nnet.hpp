#pragma once
// Shared feature extractor q, selector head h_s, classifier head h_p, their
// exact reverse-mode gradients, and the AdamW/AMSGrad optimizer stack.
//
// Every extractor is split into three stages so training can work on cached
// per-component inputs:
//
//   x --front--> F --encode--> R --trainable--> feature (width F)
//
// `front` is linear and parameter-free, so front(sum_i p_i C_i) equals
// sum_i p_i front(C_i). `encode` is parameter-free but nonlinear. Only the
// trainable stage owns parameters.
//   BandPowerMLP: front = band-limited DFT (re|im per channel),
//                 encode = standardized log band powers (C x 5),
//                 trainable = 64-wide ELU hidden layer -> 32 features.
//   CompactCNN:   front = encode = identity; trainable = the whole network.

#include "taskdenoise/rng.hpp"
#include "taskdenoise/signal.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tdn::nn {

enum class Arch { BandPowerMLP, CompactCNN };

std::string_view to_string(Arch a);
Arch parse_arch(std::string_view s);

enum class Block : int { Extractor = 0, Selector = 1, Classifier = 2 };
inline constexpr int kBlockCount = 3;
std::string_view to_string(Block b);

struct Geometry {
    std::size_t channels = 0;
    std::size_t samples = 0;
    double fs = 0.0;
    int num_classes = 2;
};

// Row-major matrix living inside a flat parameter block.
struct Slot {
    std::string name;
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t size() const { return rows * cols; }
};

struct ParamBlock {
    std::vector<double> values;
    std::vector<Slot> weights;  // max-norm applies row-wise to these
    std::vector<Slot> biases;
};

struct Band {
    double lo;
    double hi;
};
inline constexpr std::array<Band, 5> kBands{{{1.0, 4.0}, {4.0, 8.0}, {8.0, 12.0}, {12.0, 30.0}, {30.0, 45.0}}};

// DFT rows for the bins of kBands at one (T, fs).
struct SpectralBasis {
    std::size_t samples = 0;
    double fs = 0.0;
    std::vector<double> freqs;                                  // per bin
    std::array<std::pair<std::size_t, std::size_t>, 5> ranges;  // [begin, end) bins per band
    Mat cos_rows;                                               // bins x T
    Mat sin_rows;                                               // bins x T
    std::size_t bins() const { return freqs.size(); }
};

std::shared_ptr<const SpectralBasis> spectral_basis(std::size_t samples, double fs);

inline constexpr std::size_t kMlpHidden = 64;
inline constexpr std::size_t kMlpFeatures = 32;
inline constexpr std::size_t kCnnTemporalFilters = 8;
inline constexpr std::size_t kCnnMaps = 16;
inline constexpr std::size_t kCnnPool = 8;

std::size_t cnn_kernel_length(double fs);

class ModelParams {
public:
    static ModelParams init(Arch arch, Geometry geom, RngSeed seed);

    Arch arch() const noexcept { return arch_; }
    const Geometry& geometry() const noexcept { return geom_; }
    std::size_t feature_width() const noexcept { return feature_width_; }

    const ParamBlock& block(Block b) const { return blocks_[static_cast<int>(b)]; }
    // Any mutable access invalidates forward caches taken earlier.
    ParamBlock& mutable_block(Block b) {
        ++revision_;
        return blocks_[static_cast<int>(b)];
    }
    std::span<const double> values(Block b) const { return block(b).values; }
    const Slot& slot(Block b, std::string_view name) const;

    // BandPowerMLP input standardization; fixed, never trained.
    const Vec& feature_mean() const noexcept { return feat_mean_; }
    const Vec& feature_scale() const noexcept { return feat_scale_; }
    double power_floor() const noexcept { return power_floor_; }
    void set_standardization(Vec mean, Vec scale, double power_floor);

    const SpectralBasis* basis() const noexcept { return basis_.get(); }

    std::uint64_t revision() const noexcept { return revision_; }

    bool operator==(const ModelParams& o) const;

    // Checkpoint support.
    static ModelParams from_parts(Arch arch, Geometry geom, std::array<ParamBlock, kBlockCount> blocks, Vec feat_mean,
                                  Vec feat_scale, double power_floor);

private:
    ModelParams() = default;
    void finish_layout();

    Arch arch_ = Arch::BandPowerMLP;
    Geometry geom_{};
    std::size_t feature_width_ = 0;
    std::array<ParamBlock, kBlockCount> blocks_{};
    Vec feat_mean_;
    Vec feat_scale_;
    double power_floor_ = 1e-12;
    std::shared_ptr<const SpectralBasis> basis_;
    std::uint64_t revision_ = 0;
};

// ----------------------------------------------------------------------------
// Gradients

struct Gradients {
    std::array<std::vector<double>, kBlockCount> g;
    std::array<bool, kBlockCount> present{};

    static Gradients zeros_like(const ModelParams& p, std::array<bool, kBlockCount> which);
    std::vector<double>* get(Block b) { return present[static_cast<int>(b)] ? &g[static_cast<int>(b)] : nullptr; }
    const std::vector<double>* get(Block b) const {
        return present[static_cast<int>(b)] ? &g[static_cast<int>(b)] : nullptr;
    }
    double global_norm() const;
    void add(const Gradients& o);
};

// true = block is frozen (no parameter gradient is produced for it).
struct FreezeMask {
    std::array<bool, kBlockCount> frozen{};
    static FreezeMask none() { return {}; }
    static FreezeMask only(Block trainable);
    static FreezeMask all_but(std::initializer_list<Block> trainable);
    bool is_frozen(Block b) const { return frozen[static_cast<int>(b)]; }
    std::array<bool, kBlockCount> trainable() const { return {!frozen[0], !frozen[1], !frozen[2]}; }
};

// ----------------------------------------------------------------------------
// Extractor stages

Mat extractor_front(const ModelParams& p, const Mat& x);
// Adjoint of the front map.
Mat extractor_front_transpose(const ModelParams& p, const Mat& dfront);

struct EncodeCache {
    Mat front;  // BandPowerMLP only
    Mat power;  // C x 5
};

Mat extractor_encode(const ModelParams& p, const Mat& front, EncodeCache* cache);
Mat extractor_encode_backward(const ModelParams& p, const EncodeCache& cache, const Mat& dcode);

// Raw log band powers (C x 5) without standardization; used to fit it.
Mat log_band_powers(const ModelParams& p, const Mat& front);

struct TrainableCache {
    std::uint64_t revision = 0;
    bool valid = false;
    // BandPowerMLP
    Vec input;
    Vec pre1;
    Vec h1;
    // CompactCNN
    Mat padded;  // C x (T + L - 1)
    Mat y1;      // (filters * C) x T
    Mat y2;      // maps x T, pre-activation
    Mat a2;
    Mat p1;      // maps x T/8
    Mat y3;
    Mat a3;
};

Vec extractor_trainable_forward(const ModelParams& p, const Mat& code, TrainableCache* cache);
// Accumulates into grads (if non-null) and returns dcode when want_input_grad.
Mat extractor_trainable_backward(const ModelParams& p, const TrainableCache& cache, const Vec& dfeat,
                                 std::vector<double>* grads, bool want_input_grad);

struct ExtractorCache {
    EncodeCache encode;
    TrainableCache trainable;
};

// q(x): full path from a C x T matrix to the feature vector.
Vec extractor_forward(const ModelParams& p, const Mat& x, ExtractorCache* cache);
inline Vec extractor_forward(const ModelParams& p, const Trial& x, ExtractorCache* cache) {
    return extractor_forward(p, x.data(), cache);
}

// ----------------------------------------------------------------------------
// Heads and loss

double sigmoid(double z);
double selector_logit(const ModelParams& p, const Vec& feat);
double selector_forward(const ModelParams& p, const Vec& feat);
Vec classifier_forward(const ModelParams& p, const Vec& feat);
Vec softmax(const Vec& logits);
double log_sum_exp(const Vec& logits);
double cross_entropy(const Vec& logits, int label);
// d cross_entropy / d logits = softmax - onehot
Vec cross_entropy_grad(const Vec& logits, int label);

// Head backward passes: accumulate head gradients (when grads non-null) and return dfeat.
Vec selector_backward(const ModelParams& p, const Vec& feat, double dlogit, std::vector<double>* grads);
Vec classifier_backward(const ModelParams& p, const Vec& feat, const Vec& dlogits, std::vector<double>* grads);

// ----------------------------------------------------------------------------
// Whole-model passes used by tests and inference

struct ProxyPass {
    ExtractorCache extractor;
    Vec feat;
    Vec logits;
};

ProxyPass proxy_forward(const ModelParams& p, const Mat& x);

// Gradient of an upstream dL/dlogits through h_p and q. Frozen blocks get no
// parameter gradient but still pass the chain rule through. If dx is non-null
// it receives dL/dx.
Gradients proxy_backward(const ModelParams& p, const ProxyPass& pass, const Vec& dlogits, FreezeMask frozen,
                         Mat* dx = nullptr);

struct SelectorPass {
    ExtractorCache extractor;
    Vec feat;
    double logit = 0.0;
    double prob = 0.0;
};

SelectorPass selector_pass(const ModelParams& p, const Mat& x);
// Upstream is dL/dprob.
Gradients selector_pass_backward(const ModelParams& p, const SelectorPass& pass, double dprob, FreezeMask frozen,
                                 Mat* dx = nullptr);

// ----------------------------------------------------------------------------
// Optimizer stack

// Scales g in place when its global norm exceeds threshold; returns the pre-clip norm.
double clip_gradients(Gradients& g, double threshold);

// Rows of every weight slot with norm > rho are rescaled to rho. Biases untouched.
void max_norm_project(ModelParams& p, double rho);
void max_norm_project(ModelParams& p, double rho, Block only);

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
    double max_norm = 2.0;  // <= 0 disables the projection
};

struct OptimizerBlockState {
    std::vector<double> m;
    std::vector<double> v;
    std::vector<double> v_max;
    std::int64_t step = 0;
};

struct OptimizerState {
    AdamWConfig config;
    std::array<OptimizerBlockState, kBlockCount> blocks;

    static OptimizerState for_params(const ModelParams& p, AdamWConfig cfg);
};

// AdamW with decoupled weight decay and AMSGrad, applied to every block present
// in g, followed by max-norm projection of the updated blocks.
void adamw_step(ModelParams& p, const Gradients& g, OptimizerState& st, double lr);

// lr0 * ((1 - alpha) + alpha * (1 + cos(pi t / total)) / 2)
double cosine_lr(std::int64_t t, std::int64_t total, double lr0, double alpha);

}  // namespace tdn::nn
