#include "taskdenoise/training.hpp"

#include "taskdenoise/error.hpp"
#include "taskdenoise/kernels.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <tuple>

namespace tdn::train {

using nn::Block;
using nn::ModelParams;

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kPretrainShuffle = 2;
constexpr std::uint64_t kCollabShuffle = 3;
constexpr std::uint64_t kSelectorInit = 4;

void check_finite(double v, Stage stage, std::int64_t step) {
    if (!std::isfinite(v)) {
        throw NumericalError("non-finite value in " + std::string(to_string(stage)) + " at step " +
                             std::to_string(step));
    }
}

double frob_dot(const Mat& a, const Mat& b) {
    return kernels::dot({a.data(), static_cast<std::size_t>(a.size())}, {b.data(), static_cast<std::size_t>(b.size())});
}

std::int64_t batches_per_epoch(std::size_t n, std::size_t batch) {
    return static_cast<std::int64_t>((n + batch - 1) / batch);
}

std::vector<std::size_t> epoch_order(std::size_t n, Engine& eng, bool shuffle) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (shuffle) tdn::shuffle(idx, eng);
    return idx;
}

Mat trial_code(const ModelParams& p, const Mat& x) {
    return nn::extractor_encode(p, nn::extractor_front(p, x), nullptr);
}

// Cross-entropy of the proxy on a precomputed code, with optional backward into grads.
double proxy_loss_on_code(const ModelParams& p, const Mat& code, int label, nn::Gradients* g, double weight) {
    nn::TrainableCache tc;
    const Vec feat = nn::extractor_trainable_forward(p, code, g ? &tc : nullptr);
    const Vec logits = nn::classifier_forward(p, feat);
    const double loss = nn::cross_entropy(logits, label);
    if (g) {
        const Vec dlogits = nn::cross_entropy_grad(logits, label) * weight;
        const Vec dfeat = nn::classifier_backward(p, feat, dlogits, g->get(Block::Classifier));
        nn::extractor_trainable_backward(p, tc, dfeat, g->get(Block::Extractor), false);
    }
    return loss;
}

double mean_code_loss(const ModelParams& p, const std::vector<Mat>& codes, const std::vector<int>& labels) {
    double s = 0.0;
    for (std::size_t i = 0; i < codes.size(); ++i) s += proxy_loss_on_code(p, codes[i], labels[i], nullptr, 0.0);
    return s / static_cast<double>(codes.size());
}

// Forward state of one trial under the collaborative objective.
struct TrialPass {
    std::vector<Vec> feat;
    std::vector<nn::TrainableCache> cache;
    std::vector<double> prob;
    nn::EncodeCache enc;
    nn::TrainableCache hat_cache;
    Vec hat_feat;
    Vec logits;
    double loss = 0.0;
};

void forward_trial(const ModelParams& p, const PreparedTrial& t, TrialPass& s, bool keep) {
    const std::size_t n = t.code.size();
    s.feat.resize(n);
    s.prob.resize(n);
    if (keep) s.cache.resize(n);
    Mat hat = Mat::Zero(t.front[0].rows(), t.front[0].cols());
    const auto size = static_cast<std::size_t>(hat.size());
    for (std::size_t i = 0; i < n; ++i) {
        s.feat[i] = nn::extractor_trainable_forward(p, t.code[i], keep ? &s.cache[i] : nullptr);
        s.prob[i] = nn::selector_forward(p, s.feat[i]);
        kernels::axpy(s.prob[i], {t.front[i].data(), size}, {hat.data(), size});
    }
    const Mat code = nn::extractor_encode(p, hat, keep ? &s.enc : nullptr);
    s.hat_feat = nn::extractor_trainable_forward(p, code, keep ? &s.hat_cache : nullptr);
    s.logits = nn::classifier_forward(p, s.hat_feat);
    s.loss = nn::cross_entropy(s.logits, t.label);
}

// Accumulates gradients of weight * loss for the blocks present in g.
// Step A (selector only) and step B (extractor + classifier) differ only in
// which blocks are present.
void backward_trial(const ModelParams& p, const PreparedTrial& t, const TrialPass& s, double weight,
                    nn::Gradients& g) {
    const Vec dlogits = nn::cross_entropy_grad(s.logits, t.label) * weight;
    const Vec dfeat_hat = nn::classifier_backward(p, s.hat_feat, dlogits, g.get(Block::Classifier));
    const Mat dcode = nn::extractor_trainable_backward(p, s.hat_cache, dfeat_hat, g.get(Block::Extractor), true);
    const Mat dfront = nn::extractor_encode_backward(p, s.enc, dcode);
    auto* gsel = g.get(Block::Selector);
    auto* gext = g.get(Block::Extractor);
    for (std::size_t i = 0; i < t.front.size(); ++i) {
        const double dp = frob_dot(dfront, t.front[i]);
        const double dlogit = dp * s.prob[i] * (1.0 - s.prob[i]);
        if (dlogit == 0.0) continue;
        const Vec dfeat = nn::selector_backward(p, s.feat[i], dlogit, gsel);
        if (gext) nn::extractor_trainable_backward(p, s.cache[i], dfeat, gext, false);
    }
}

double batch_loss(const ModelParams& p, const std::vector<const PreparedTrial*>& batch) {
    double total = 0.0;
    TrialPass s;
    for (const auto* t : batch) {
        forward_trial(p, *t, s, false);
        total += s.loss;
    }
    return total / static_cast<double>(batch.size());
}

// One block-restricted gradient step on the collaborative objective; returns (loss, grad norm).
std::pair<double, double> collab_half_step(ModelParams& p, nn::OptimizerState& opt,
                                           const std::vector<const PreparedTrial*>& batch,
                                           std::array<bool, nn::kBlockCount> which, const TrainConfig& cfg,
                                           double lr, Stage stage) {
    double loss = 0.0;
    nn::Gradients g = collab_gradients(p, batch, which, &loss);
    check_finite(loss, stage, 0);
    double norm = 0.0;
    try {
        norm = nn::clip_gradients(g, cfg.clip_threshold);
        nn::adamw_step(p, g, opt, lr);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(to_string(stage)) + ": " + e.what());
    }
    return {loss, norm};
}

}  // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) throw ValidationError("batch size must be >= 1");
    if (!(lr_selector > 0.0) || !(lr_proxy > 0.0)) throw ValidationError("learning rates must be positive");
    if (epochs_pretrain < 0 || epochs_collab < 0) throw ValidationError("epochs must be >= 0");
    if (!(clip_threshold > 0.0)) throw ValidationError("clip threshold must be positive");
    if (!(cosine_alpha >= 0.0 && cosine_alpha <= 1.0)) throw ValidationError("cosine alpha must lie in [0, 1]");
    if (!(weight_decay >= 0.0)) throw ValidationError("weight decay must be >= 0");
    if (!std::isfinite(selector_init_bias)) throw ValidationError("selector init bias must be finite");
    decomposition.validate();
}

nn::AdamWConfig TrainConfig::adamw() const {
    nn::AdamWConfig a;
    a.weight_decay = weight_decay;
    a.max_norm = max_norm;
    return a;
}

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::Pretrain: return "pretrain";
        case Stage::SelectorStep: return "selector";
        case Stage::ProxyStep: return "proxy";
    }
    return "?";
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << "stage,epoch,step,loss,lr_s,lr_p,grad_norm\n";
    char buf[256];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%s,%d,%lld,%.17g,%.17g,%.17g,%.17g\n", std::string(to_string(r.stage)).c_str(),
                      r.epoch, static_cast<long long>(r.step), r.loss, r.lr_s, r.lr_p, r.grad_norm);
        f << buf;
    }
    if (!f) throw IoError("write failed for " + path.string());
}

void fit_standardization(ModelParams& p, const TrialSet& data) {
    if (p.arch() != nn::Arch::BandPowerMLP || data.empty()) return;
    const auto width = static_cast<Eigen::Index>(data.channels() * nn::kBands.size());
    std::vector<Mat> fronts;
    fronts.reserve(data.size());
    double mean_power = 0.0;
    for (const auto& t : data.trials()) {
        fronts.push_back(nn::extractor_front(p, t.data()));
        mean_power += nn::log_band_powers(p, fronts.back()).array().exp().mean();
    }
    const double n = static_cast<double>(data.size());
    // The floor keeps log() finite for components with no power in a band.
    const double floor = std::max(1e-12 * mean_power / n, 1e-300);
    p.set_standardization(Vec::Zero(width), Vec::Ones(width), floor);

    Vec mean = Vec::Zero(width);
    Vec sq = Vec::Zero(width);
    for (const auto& f : fronts) {
        const Mat lp = nn::log_band_powers(p, f);
        const Eigen::Map<const Vec> v(lp.data(), lp.size());
        mean += v;
        sq += v.cwiseProduct(v);
    }
    mean /= n;
    Vec scale(width);
    for (Eigen::Index i = 0; i < width; ++i) {
        const double sd = std::sqrt(std::max(0.0, sq(i) / n - mean(i) * mean(i)));
        scale(i) = sd > 1e-6 ? 1.0 / sd : 1.0;
    }
    p.set_standardization(std::move(mean), std::move(scale), floor);
}

void init_selector(ModelParams& p, const TrainConfig& cfg) {
    auto& blk = p.mutable_block(Block::Selector);
    Engine eng = make_engine(derive(cfg.seed, kSelectorInit));
    const nn::Slot& w = blk.weights[0];
    for (std::size_t i = 0; i < w.size(); ++i) blk.values[w.offset + i] = uniform(eng, -0.01, 0.01);
    blk.values[blk.biases[0].offset] = cfg.selector_init_bias;
}

TrainResult pretrain(const TrialSet& data, const TrainConfig& cfg, const TrialSet* val) {
    cfg.validate();
    if (data.empty()) throw ValidationError("pretrain on an empty dataset");
    const nn::Geometry geom{data.channels(), data.samples(), data.fs(), data.num_classes()};
    TrainResult out{ModelParams::init(cfg.arch, geom, derive(cfg.seed, kInitStream)), {}};
    ModelParams& p = out.params;
    fit_standardization(p, data);

    std::vector<Mat> codes;
    codes.reserve(data.size());
    for (const auto& t : data.trials()) codes.push_back(trial_code(p, t.data()));
    std::vector<Mat> val_codes;
    if (val) {
        for (const auto& t : val->trials()) val_codes.push_back(trial_code(p, t.data()));
    }

    nn::OptimizerState opt = nn::OptimizerState::for_params(p, cfg.adamw());
    Engine eng = make_engine(derive(cfg.seed, kPretrainShuffle));
    const std::int64_t per_epoch = batches_per_epoch(data.size(), cfg.batch_size);
    const std::int64_t total = per_epoch * cfg.epochs_pretrain;
    std::int64_t step = 0;
    double best = std::numeric_limits<double>::infinity();
    std::optional<ModelParams> best_params;
    for (int epoch = 0; epoch < cfg.epochs_pretrain; ++epoch) {
        const auto order = epoch_order(data.size(), eng, true);
        for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size, ++step) {
            const std::size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
            const double w = 1.0 / static_cast<double>(b1 - b0);
            nn::Gradients g = nn::Gradients::zeros_like(p, {true, false, true});
            double loss = 0.0;
            for (std::size_t k = b0; k < b1; ++k) {
                loss += proxy_loss_on_code(p, codes[order[k]], data.label(order[k]), &g, w);
            }
            loss *= w;
            check_finite(loss, Stage::Pretrain, step);
            const double lr = nn::cosine_lr(step, total, cfg.lr_proxy, cfg.cosine_alpha);
            double norm = 0.0;
            try {
                norm = nn::clip_gradients(g, cfg.clip_threshold);
                nn::adamw_step(p, g, opt, lr);
            } catch (const NumericalError& e) {
                throw NumericalError("pretrain step " + std::to_string(step) + ": " + e.what());
            }
            out.history.records.push_back({Stage::Pretrain, epoch, step, loss, 0.0, lr, norm});
        }
        if (val && !val->empty()) {
            const double vl = mean_code_loss(p, val_codes, val->labels());
            if (vl < best) {
                best = vl;
                best_params = p;
                out.history.best_epoch = epoch + 1;
                out.history.best_val_loss = vl;
            }
        }
    }
    if (best_params) p = *best_params;
    init_selector(p, cfg);
    return out;
}

PreparedTrial prepare(const ModelParams& p, const ComponentSet& cs, int label) {
    PreparedTrial t;
    t.label = label;
    t.front.reserve(cs.size());
    t.code.reserve(cs.size());
    for (const auto& c : cs.components()) {
        Mat f = nn::extractor_front(p, c);
        t.code.push_back(nn::extractor_encode(p, f, nullptr));
        t.front.push_back(std::move(f));
    }
    return t;
}

std::vector<PreparedTrial> prepare_all(const ModelParams& p, const std::vector<ComponentSet>& cs,
                                       const std::vector<int>& labels) {
    if (cs.size() != labels.size()) throw ValidationError("components and labels differ in length");
    std::vector<PreparedTrial> out;
    out.reserve(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i) out.push_back(prepare(p, cs[i], labels[i]));
    return out;
}

double collab_loss(const ModelParams& p, const std::vector<const PreparedTrial*>& batch) {
    if (batch.empty()) throw ValidationError("collab_loss on an empty batch");
    return batch_loss(p, batch);
}

double collab_loss(const ModelParams& p, const std::vector<PreparedTrial>& trials) {
    std::vector<const PreparedTrial*> ptrs;
    for (const auto& t : trials) ptrs.push_back(&t);
    return collab_loss(p, ptrs);
}

nn::Gradients collab_gradients(const ModelParams& p, const std::vector<const PreparedTrial*>& batch,
                               std::array<bool, nn::kBlockCount> which, double* loss) {
    if (batch.empty()) throw ValidationError("collab_gradients on an empty batch");
    nn::Gradients g = nn::Gradients::zeros_like(p, which);
    const double w = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    TrialPass s;
    for (const auto* t : batch) {
        forward_trial(p, *t, s, true);
        total += s.loss;
        backward_trial(p, *t, s, w, g);
    }
    if (loss) *loss = total * w;
    return g;
}

CollabStepResult collab_step(ModelParams& p, nn::OptimizerState& opt, const std::vector<const PreparedTrial*>& batch,
                             const TrainConfig& cfg, double lr_s, double lr_p, bool want_loss_after) {
    if (batch.empty()) throw ValidationError("collab_step on an empty batch");
    CollabStepResult r;
    std::tie(r.loss_before, r.grad_norm_selector) =
        collab_half_step(p, opt, batch, {false, true, false}, cfg, lr_s, Stage::SelectorStep);
    std::tie(r.loss_mid, r.grad_norm_proxy) =
        collab_half_step(p, opt, batch, {true, false, true}, cfg, lr_p, Stage::ProxyStep);
    r.loss_after = want_loss_after ? batch_loss(p, batch) : std::numeric_limits<double>::quiet_NaN();
    return r;
}

std::vector<ComponentSet> decompose_all(const TrialSet& data, const DecompConfig& cfg, RngSeed seed) {
    std::vector<ComponentSet> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.push_back(decompose(data.trial(i), cfg, derive(seed, i)));
    return out;
}

TrainResult train(const TrialSet& data, const std::vector<ComponentSet>& components, const TrainConfig& cfg,
                  const TrialSet* val, const std::vector<ComponentSet>* val_components) {
    if (components.size() != data.size()) throw ValidationError("one ComponentSet per training trial required");
    if (val && (!val_components || val_components->size() != val->size())) {
        throw ValidationError("validation trials need matching components");
    }
    TrainResult out = pretrain(data, cfg, val);
    ModelParams& p = out.params;
    const auto prepared = prepare_all(p, components, data.labels());
    std::vector<PreparedTrial> val_prepared;
    if (val) val_prepared = prepare_all(p, *val_components, val->labels());

    nn::OptimizerState opt = nn::OptimizerState::for_params(p, cfg.adamw());
    Engine eng = make_engine(derive(cfg.seed, kCollabShuffle));
    const bool full = cfg.full_batch_descent_mode;
    const std::size_t batch = full ? data.size() : cfg.batch_size;
    const std::int64_t per_epoch = batches_per_epoch(data.size(), batch);
    const std::int64_t total = per_epoch * cfg.epochs_collab;

    double best = std::numeric_limits<double>::infinity();
    std::optional<ModelParams> best_params;
    auto consider = [&](int epoch) {
        if (val_prepared.empty()) return;
        const double vl = collab_loss(p, val_prepared);
        if (vl < best) {
            best = vl;
            best_params = p;
            out.history.best_epoch = epoch;
            out.history.best_val_loss = vl;
        }
    };
    consider(0);

    std::int64_t step = 0;
    std::vector<const PreparedTrial*> ptrs;
    for (int epoch = 0; epoch < cfg.epochs_collab; ++epoch) {
        const auto order = epoch_order(data.size(), eng, !full);
        for (std::size_t b0 = 0; b0 < order.size(); b0 += batch, ++step) {
            const std::size_t b1 = std::min(order.size(), b0 + batch);
            ptrs.clear();
            for (std::size_t k = b0; k < b1; ++k) ptrs.push_back(&prepared[order[k]]);
            const double lr_s = full ? cfg.lr_selector : nn::cosine_lr(step, total, cfg.lr_selector, cfg.cosine_alpha);
            const double lr_p = full ? cfg.lr_proxy : nn::cosine_lr(step, total, cfg.lr_proxy, cfg.cosine_alpha);
            const auto r = collab_step(p, opt, ptrs, cfg, lr_s, lr_p, false);
            out.history.records.push_back({Stage::SelectorStep, epoch, step, r.loss_before, lr_s, lr_p,
                                           r.grad_norm_selector});
            out.history.records.push_back({Stage::ProxyStep, epoch, step, r.loss_mid, lr_s, lr_p, r.grad_norm_proxy});
        }
        consider(epoch + 1);
    }
    if (best_params) p = *best_params;
    spdlog::debug("train: {} collab steps, best epoch {}", step, out.history.best_epoch);
    return out;
}

TrainResult train(const TrialSet& data, const TrainConfig& cfg, const TrialSet* val) {
    cfg.validate();
    const RngSeed dseed = derive(cfg.seed, 5);
    const auto comps = decompose_all(data, cfg.decomposition, dseed);
    if (!val) return train(data, comps, cfg);
    const auto vcomps = decompose_all(*val, cfg.decomposition, derive(cfg.seed, 6));
    return train(data, comps, cfg, val, &vcomps);
}

std::vector<double> component_probabilities(const ModelParams& p, const PreparedTrial& t) {
    std::vector<double> probs;
    probs.reserve(t.code.size());
    for (const auto& c : t.code) {
        probs.push_back(nn::selector_forward(p, nn::extractor_trainable_forward(p, c, nullptr)));
    }
    return probs;
}

std::vector<double> component_probabilities(const ModelParams& p, const ComponentSet& cs) {
    std::vector<double> probs;
    probs.reserve(cs.size());
    for (const auto& c : cs.components()) probs.push_back(nn::selector_forward(p, nn::extractor_forward(p, c, nullptr)));
    return probs;
}

SelectionResult select(const ModelParams& p, const ComponentSet& cs) {
    auto probs = component_probabilities(p, cs);
    Trial rec = reconstruct(cs, probs);
    return SelectionResult{std::move(probs), cs.energies(), std::move(rec)};
}

SelectionResult denoise(const ModelParams& p, const Trial& x, const DecompConfig& dcfg, RngSeed seed) {
    const auto& g = p.geometry();
    if (x.channels() != g.channels || x.samples() != g.samples) {
        throw ValidationError("denoise: trial is " + std::to_string(x.channels()) + "x" + std::to_string(x.samples()) +
                              ", model expects " + std::to_string(g.channels) + "x" + std::to_string(g.samples));
    }
    if (std::abs(x.fs() - g.fs) > 1e-9 * g.fs) throw ValidationError("denoise: sampling rate differs from the model's");
    return select(p, decompose(x, dcfg, seed));
}

int predict(const ModelParams& p, const Mat& x) {
    const Vec logits = nn::classifier_forward(p, nn::extractor_forward(p, x, nullptr));
    Eigen::Index k = 0;
    logits.maxCoeff(&k);
    return static_cast<int>(k);
}

}  // namespace tdn::train
