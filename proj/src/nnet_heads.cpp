#include "taskdenoise/error.hpp"
#include "taskdenoise/kernels.hpp"
#include "taskdenoise/nnet.hpp"

#include <cmath>

namespace tdn::nn {

namespace {

void check_feat(const ModelParams& p, const Vec& feat) {
    if (static_cast<std::size_t>(feat.size()) != p.feature_width()) {
        throw ValidationError("feature width " + std::to_string(feat.size()) + " != " +
                              std::to_string(p.feature_width()));
    }
}

}  // namespace

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double selector_logit(const ModelParams& p, const Vec& feat) {
    check_feat(p, feat);
    const auto& blk = p.block(Block::Selector);
    const Slot& w = blk.weights[0];
    return kernels::active().dot(blk.values.data() + w.offset, feat.data(), w.cols) + blk.values[blk.biases[0].offset];
}

double selector_forward(const ModelParams& p, const Vec& feat) { return sigmoid(selector_logit(p, feat)); }

Vec classifier_forward(const ModelParams& p, const Vec& feat) {
    check_feat(p, feat);
    const auto& blk = p.block(Block::Classifier);
    const Slot& w = blk.weights[0];
    const Slot& b = blk.biases[0];
    Vec logits(static_cast<Eigen::Index>(w.rows));
    kernels::gemv(blk.values.data() + w.offset, w.rows, w.cols, feat.data(), logits.data());
    for (std::size_t i = 0; i < w.rows; ++i) logits(static_cast<Eigen::Index>(i)) += blk.values[b.offset + i];
    return logits;
}

double log_sum_exp(const Vec& logits) {
    const double m = logits.maxCoeff();
    return m + std::log((logits.array() - m).exp().sum());
}

Vec softmax(const Vec& logits) {
    const double m = logits.maxCoeff();
    Vec e = (logits.array() - m).exp().matrix();
    return e / e.sum();
}

double cross_entropy(const Vec& logits, int label) {
    if (label < 0 || label >= logits.size()) {
        throw ValidationError("label " + std::to_string(label) + " outside [0," + std::to_string(logits.size()) + ")");
    }
    const double loss = log_sum_exp(logits) - logits(label);
    return loss < 0.0 ? 0.0 : loss;
}

Vec cross_entropy_grad(const Vec& logits, int label) {
    if (label < 0 || label >= logits.size()) throw ValidationError("label out of range");
    Vec g = softmax(logits);
    g(label) -= 1.0;
    return g;
}

Vec selector_backward(const ModelParams& p, const Vec& feat, double dlogit, std::vector<double>* grads) {
    const auto& blk = p.block(Block::Selector);
    const Slot& w = blk.weights[0];
    if (grads) {
        double* g = grads->data();
        kernels::axpy(dlogit, {feat.data(), w.cols}, {g + w.offset, w.cols});
        g[blk.biases[0].offset] += dlogit;
    }
    Vec dfeat(static_cast<Eigen::Index>(w.cols));
    for (std::size_t i = 0; i < w.cols; ++i) dfeat(static_cast<Eigen::Index>(i)) = dlogit * blk.values[w.offset + i];
    return dfeat;
}

Vec classifier_backward(const ModelParams& p, const Vec& feat, const Vec& dlogits, std::vector<double>* grads) {
    const auto& blk = p.block(Block::Classifier);
    const Slot& w = blk.weights[0];
    const Slot& b = blk.biases[0];
    if (grads) {
        double* g = grads->data();
        kernels::outer_acc(dlogits.data(), w.rows, feat.data(), w.cols, g + w.offset);
        for (std::size_t i = 0; i < w.rows; ++i) g[b.offset + i] += dlogits(static_cast<Eigen::Index>(i));
    }
    Vec dfeat = Vec::Zero(static_cast<Eigen::Index>(w.cols));
    kernels::gemv_t_acc(blk.values.data() + w.offset, w.rows, w.cols, dlogits.data(), dfeat.data());
    return dfeat;
}

ProxyPass proxy_forward(const ModelParams& p, const Mat& x) {
    ProxyPass pass;
    pass.feat = extractor_forward(p, x, &pass.extractor);
    pass.logits = classifier_forward(p, pass.feat);
    return pass;
}

namespace {

void extractor_tail_backward(const ModelParams& p, const ExtractorCache& cache, const Vec& dfeat, Gradients& g,
                             Mat* dx) {
    const Mat dcode =
        extractor_trainable_backward(p, cache.trainable, dfeat, g.get(Block::Extractor), dx != nullptr);
    if (dx) *dx = extractor_front_transpose(p, extractor_encode_backward(p, cache.encode, dcode));
}

}  // namespace

Gradients proxy_backward(const ModelParams& p, const ProxyPass& pass, const Vec& dlogits, FreezeMask frozen,
                         Mat* dx) {
    auto tr = frozen.trainable();
    tr[static_cast<int>(Block::Selector)] = false;
    Gradients g = Gradients::zeros_like(p, tr);
    const Vec dfeat = classifier_backward(p, pass.feat, dlogits, g.get(Block::Classifier));
    extractor_tail_backward(p, pass.extractor, dfeat, g, dx);
    return g;
}

SelectorPass selector_pass(const ModelParams& p, const Mat& x) {
    SelectorPass pass;
    pass.feat = extractor_forward(p, x, &pass.extractor);
    pass.logit = selector_logit(p, pass.feat);
    pass.prob = sigmoid(pass.logit);
    return pass;
}

Gradients selector_pass_backward(const ModelParams& p, const SelectorPass& pass, double dprob, FreezeMask frozen,
                                 Mat* dx) {
    auto tr = frozen.trainable();
    tr[static_cast<int>(Block::Classifier)] = false;
    Gradients g = Gradients::zeros_like(p, tr);
    const double dlogit = dprob * pass.prob * (1.0 - pass.prob);
    const Vec dfeat = selector_backward(p, pass.feat, dlogit, g.get(Block::Selector));
    extractor_tail_backward(p, pass.extractor, dfeat, g, dx);
    return g;
}

}  // namespace tdn::nn
