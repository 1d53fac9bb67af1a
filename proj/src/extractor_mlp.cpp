#include "extractor_impl.hpp"

#include "taskdenoise/error.hpp"
#include "taskdenoise/kernels.hpp"

#include <cmath>

namespace tdn::nn::detail {

// Layout: hidden.weight (64 x C*5), hidden.bias, out.weight (32 x 64), out.bias.
Vec mlp_forward(const ModelParams& p, const Mat& code, TrainableCache* cache) {
    const auto& blk = p.block(Block::Extractor);
    const Slot& w1 = blk.weights[0];
    const Slot& b1 = blk.biases[0];
    const Slot& w2 = blk.weights[1];
    const Slot& b2 = blk.biases[1];
    if (static_cast<std::size_t>(code.size()) != w1.cols) throw ValidationError("band-power code width mismatch");
    const double* v = blk.values.data();

    Vec pre1(static_cast<Eigen::Index>(w1.rows));
    kernels::gemv(v + w1.offset, w1.rows, w1.cols, code.data(), pre1.data());
    Vec h1(pre1.size());
    for (Eigen::Index i = 0; i < pre1.size(); ++i) {
        pre1(i) += v[b1.offset + static_cast<std::size_t>(i)];
        h1(i) = elu(pre1(i));
    }
    Vec feat(static_cast<Eigen::Index>(w2.rows));
    kernels::gemv(v + w2.offset, w2.rows, w2.cols, h1.data(), feat.data());
    for (Eigen::Index i = 0; i < feat.size(); ++i) feat(i) += v[b2.offset + static_cast<std::size_t>(i)];

    if (cache) {
        cache->input = Eigen::Map<const Vec>(code.data(), code.size());
        cache->pre1 = std::move(pre1);
        cache->h1 = std::move(h1);
    }
    return feat;
}

Mat mlp_backward(const ModelParams& p, const TrainableCache& cache, const Vec& dfeat, std::vector<double>* grads,
                 bool want_input_grad) {
    const auto& blk = p.block(Block::Extractor);
    const Slot& w1 = blk.weights[0];
    const Slot& b1 = blk.biases[0];
    const Slot& w2 = blk.weights[1];
    const Slot& b2 = blk.biases[1];
    const double* v = blk.values.data();

    Vec dh1 = Vec::Zero(static_cast<Eigen::Index>(w2.cols));
    kernels::gemv_t_acc(v + w2.offset, w2.rows, w2.cols, dfeat.data(), dh1.data());
    Vec dpre1(dh1.size());
    for (Eigen::Index i = 0; i < dh1.size(); ++i) dpre1(i) = dh1(i) * elu_grad(cache.pre1(i));

    if (grads) {
        double* g = grads->data();
        kernels::outer_acc(dfeat.data(), w2.rows, cache.h1.data(), w2.cols, g + w2.offset);
        for (std::size_t i = 0; i < b2.cols; ++i) g[b2.offset + i] += dfeat(static_cast<Eigen::Index>(i));
        kernels::outer_acc(dpre1.data(), w1.rows, cache.input.data(), w1.cols, g + w1.offset);
        for (std::size_t i = 0; i < b1.cols; ++i) g[b1.offset + i] += dpre1(static_cast<Eigen::Index>(i));
    }
    if (!want_input_grad) return {};
    const std::size_t channels = p.geometry().channels;
    Mat dcode = Mat::Zero(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(w1.cols / channels));
    kernels::gemv_t_acc(v + w1.offset, w1.rows, w1.cols, dpre1.data(), dcode.data());
    return dcode;
}

}  // namespace tdn::nn::detail
