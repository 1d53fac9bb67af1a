#include "extractor_impl.hpp"

#include "taskdenoise/error.hpp"
#include "taskdenoise/kernels.hpp"

namespace tdn::nn::detail {

namespace {

struct CnnSlots {
    const Slot& temporal;
    const Slot& spatial;
    const Slot& spatial_bias;
    const Slot& pointwise;
    const Slot& pointwise_bias;
};

CnnSlots slots(const ModelParams& p) {
    const auto& blk = p.block(Block::Extractor);
    return {blk.weights[0], blk.weights[1], blk.biases[0], blk.weights[2], blk.biases[1]};
}

// Maps 2m and 2m+1 share temporal filter m.
constexpr std::size_t filter_of(std::size_t map) { return map / (kCnnMaps / kCnnTemporalFilters); }

}  // namespace

Vec cnn_forward(const ModelParams& p, const Mat& x, TrainableCache* cache) {
    const auto s = slots(p);
    const double* v = p.block(Block::Extractor).values.data();
    const auto& k = kernels::active();
    const std::size_t c_n = static_cast<std::size_t>(x.rows());
    const std::size_t t_n = static_cast<std::size_t>(x.cols());
    const std::size_t len = s.temporal.cols;
    const std::size_t half = (len - 1) / 2;
    const std::size_t p1_n = t_n / kCnnPool;
    const std::size_t p2_n = p1_n / kCnnPool;

    Mat padded = Mat::Zero(x.rows(), static_cast<Eigen::Index>(t_n + len - 1));
    padded.middleCols(static_cast<Eigen::Index>(half), x.cols()) = x;

    // Temporal convolution, same padding: row (f * C + c).
    Mat y1(static_cast<Eigen::Index>(kCnnTemporalFilters * c_n), x.cols());
    for (std::size_t f = 0; f < kCnnTemporalFilters; ++f) {
        const double* w = v + s.temporal.offset + f * len;
        for (std::size_t c = 0; c < c_n; ++c) {
            const double* src = padded.row(static_cast<Eigen::Index>(c)).data();
            double* dst = y1.row(static_cast<Eigen::Index>(f * c_n + c)).data();
            for (std::size_t t = 0; t < t_n; ++t) dst[t] = k.dot(w, src + t, len);
        }
    }

    // Depthwise spatial filter: C -> 1 per map.
    Mat y2(static_cast<Eigen::Index>(kCnnMaps), x.cols());
    for (std::size_t m = 0; m < kCnnMaps; ++m) {
        double* dst = y2.row(static_cast<Eigen::Index>(m)).data();
        const double bias = v[s.spatial_bias.offset + m];
        for (std::size_t t = 0; t < t_n; ++t) dst[t] = bias;
        const std::size_t f = filter_of(m);
        for (std::size_t c = 0; c < c_n; ++c) {
            k.axpy(v[s.spatial.offset + m * c_n + c], y1.row(static_cast<Eigen::Index>(f * c_n + c)).data(), dst, t_n);
        }
    }
    Mat a2 = y2.unaryExpr([](double z) { return elu(z); });

    Mat p1(static_cast<Eigen::Index>(kCnnMaps), static_cast<Eigen::Index>(p1_n));
    for (std::size_t m = 0; m < kCnnMaps; ++m) {
        for (std::size_t j = 0; j < p1_n; ++j) {
            p1(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) =
                a2.row(static_cast<Eigen::Index>(m)).segment(static_cast<Eigen::Index>(j * kCnnPool), kCnnPool).mean();
        }
    }

    // Pointwise mix.
    Mat y3(static_cast<Eigen::Index>(kCnnMaps), static_cast<Eigen::Index>(p1_n));
    for (std::size_t m = 0; m < kCnnMaps; ++m) {
        double* dst = y3.row(static_cast<Eigen::Index>(m)).data();
        const double bias = v[s.pointwise_bias.offset + m];
        for (std::size_t j = 0; j < p1_n; ++j) dst[j] = bias;
        for (std::size_t q = 0; q < kCnnMaps; ++q) {
            k.axpy(v[s.pointwise.offset + m * kCnnMaps + q], p1.row(static_cast<Eigen::Index>(q)).data(), dst, p1_n);
        }
    }
    Mat a3 = y3.unaryExpr([](double z) { return elu(z); });

    Vec feat(static_cast<Eigen::Index>(kCnnMaps * p2_n));
    for (std::size_t m = 0; m < kCnnMaps; ++m) {
        for (std::size_t i = 0; i < p2_n; ++i) {
            feat(static_cast<Eigen::Index>(m * p2_n + i)) =
                a3.row(static_cast<Eigen::Index>(m)).segment(static_cast<Eigen::Index>(i * kCnnPool), kCnnPool).mean();
        }
    }

    if (cache) {
        cache->padded = std::move(padded);
        cache->y1 = std::move(y1);
        cache->y2 = std::move(y2);
        cache->a2 = std::move(a2);
        cache->p1 = std::move(p1);
        cache->y3 = std::move(y3);
        cache->a3 = std::move(a3);
    }
    return feat;
}

Mat cnn_backward(const ModelParams& p, const TrainableCache& cache, const Vec& dfeat, std::vector<double>* grads,
                 bool want_input_grad) {
    const auto s = slots(p);
    const double* v = p.block(Block::Extractor).values.data();
    const auto& k = kernels::active();
    const std::size_t c_n = p.geometry().channels;
    const std::size_t t_n = p.geometry().samples;
    const std::size_t len = s.temporal.cols;
    const std::size_t half = (len - 1) / 2;
    const std::size_t p1_n = t_n / kCnnPool;
    const std::size_t p2_n = p1_n / kCnnPool;
    const double inv_pool = 1.0 / static_cast<double>(kCnnPool);
    double* g = grads ? grads->data() : nullptr;

    // Second pool + ELU.
    Mat dy3 = Mat::Zero(static_cast<Eigen::Index>(kCnnMaps), static_cast<Eigen::Index>(p1_n));
    for (std::size_t m = 0; m < kCnnMaps; ++m) {
        for (std::size_t i = 0; i < p2_n; ++i) {
            const double d = dfeat(static_cast<Eigen::Index>(m * p2_n + i)) * inv_pool;
            for (std::size_t r = 0; r < kCnnPool; ++r) {
                const auto col = static_cast<Eigen::Index>(i * kCnnPool + r);
                dy3(static_cast<Eigen::Index>(m), col) = d * elu_grad(cache.y3(static_cast<Eigen::Index>(m), col));
            }
        }
    }

    // Pointwise mix.
    Mat dp1 = Mat::Zero(static_cast<Eigen::Index>(kCnnMaps), static_cast<Eigen::Index>(p1_n));
    for (std::size_t m = 0; m < kCnnMaps; ++m) {
        const double* d = dy3.row(static_cast<Eigen::Index>(m)).data();
        for (std::size_t q = 0; q < kCnnMaps; ++q) {
            const double* src = cache.p1.row(static_cast<Eigen::Index>(q)).data();
            if (g) g[s.pointwise.offset + m * kCnnMaps + q] += k.dot(d, src, p1_n);
            k.axpy(v[s.pointwise.offset + m * kCnnMaps + q], d, dp1.row(static_cast<Eigen::Index>(q)).data(), p1_n);
        }
        if (g) {
            double acc = 0.0;
            for (std::size_t j = 0; j < p1_n; ++j) acc += d[j];
            g[s.pointwise_bias.offset + m] += acc;
        }
    }

    // First pool + ELU.
    Mat dy2 = Mat::Zero(static_cast<Eigen::Index>(kCnnMaps), static_cast<Eigen::Index>(t_n));
    for (std::size_t m = 0; m < kCnnMaps; ++m) {
        for (std::size_t j = 0; j < p1_n; ++j) {
            const double d = dp1(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) * inv_pool;
            for (std::size_t r = 0; r < kCnnPool; ++r) {
                const auto col = static_cast<Eigen::Index>(j * kCnnPool + r);
                dy2(static_cast<Eigen::Index>(m), col) = d * elu_grad(cache.y2(static_cast<Eigen::Index>(m), col));
            }
        }
    }

    // Spatial filter.
    Mat dy1 = Mat::Zero(static_cast<Eigen::Index>(kCnnTemporalFilters * c_n), static_cast<Eigen::Index>(t_n));
    for (std::size_t m = 0; m < kCnnMaps; ++m) {
        const double* d = dy2.row(static_cast<Eigen::Index>(m)).data();
        const std::size_t f = filter_of(m);
        for (std::size_t c = 0; c < c_n; ++c) {
            const auto row = static_cast<Eigen::Index>(f * c_n + c);
            if (g) g[s.spatial.offset + m * c_n + c] += k.dot(d, cache.y1.row(row).data(), t_n);
            k.axpy(v[s.spatial.offset + m * c_n + c], d, dy1.row(row).data(), t_n);
        }
        if (g) {
            double acc = 0.0;
            for (std::size_t t = 0; t < t_n; ++t) acc += d[t];
            g[s.spatial_bias.offset + m] += acc;
        }
    }

    // Temporal convolution.
    Mat dpadded;
    if (want_input_grad) dpadded = Mat::Zero(cache.padded.rows(), cache.padded.cols());
    for (std::size_t f = 0; f < kCnnTemporalFilters; ++f) {
        const double* w = v + s.temporal.offset + f * len;
        for (std::size_t c = 0; c < c_n; ++c) {
            const double* d = dy1.row(static_cast<Eigen::Index>(f * c_n + c)).data();
            const double* src = cache.padded.row(static_cast<Eigen::Index>(c)).data();
            for (std::size_t tap = 0; tap < len; ++tap) {
                if (g) g[s.temporal.offset + f * len + tap] += k.dot(d, src + tap, t_n);
                if (want_input_grad) k.axpy(w[tap], d, dpadded.row(static_cast<Eigen::Index>(c)).data() + tap, t_n);
            }
        }
    }
    if (!want_input_grad) return {};
    return dpadded.middleCols(static_cast<Eigen::Index>(half), static_cast<Eigen::Index>(t_n));
}

}  // namespace tdn::nn::detail
