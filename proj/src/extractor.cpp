#include "extractor_impl.hpp"

#include "taskdenoise/error.hpp"
#include "taskdenoise/kernels.hpp"

#include <cmath>

namespace tdn::nn {

namespace {

void check_shape(const ModelParams& p, const Mat& x) {
    const auto& g = p.geometry();
    if (static_cast<std::size_t>(x.rows()) != g.channels || static_cast<std::size_t>(x.cols()) != g.samples) {
        throw ValidationError("input is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                              ", model expects " + std::to_string(g.channels) + "x" + std::to_string(g.samples));
    }
}

constexpr double power_norm(std::size_t samples) {
    return 2.0 / (static_cast<double>(samples) * static_cast<double>(samples));
}

}  // namespace

Mat extractor_front(const ModelParams& p, const Mat& x) {
    check_shape(p, x);
    if (p.arch() == Arch::CompactCNN) return x;
    const SpectralBasis& sb = *p.basis();
    const std::size_t nb = sb.bins();
    const std::size_t t = sb.samples;
    Mat out(x.rows(), static_cast<Eigen::Index>(2 * nb));
    for (Eigen::Index c = 0; c < x.rows(); ++c) {
        const double* row = x.row(c).data();
        double* o = out.row(c).data();
        kernels::gemv(sb.cos_rows.data(), nb, t, row, o);
        kernels::gemv(sb.sin_rows.data(), nb, t, row, o + nb);
    }
    return out;
}

Mat extractor_front_transpose(const ModelParams& p, const Mat& dfront) {
    if (p.arch() == Arch::CompactCNN) return dfront;
    const SpectralBasis& sb = *p.basis();
    const std::size_t nb = sb.bins();
    Mat dx = Mat::Zero(dfront.rows(), static_cast<Eigen::Index>(sb.samples));
    for (Eigen::Index c = 0; c < dfront.rows(); ++c) {
        const double* d = dfront.row(c).data();
        double* o = dx.row(c).data();
        kernels::gemv_t_acc(sb.cos_rows.data(), nb, sb.samples, d, o);
        kernels::gemv_t_acc(sb.sin_rows.data(), nb, sb.samples, d + nb, o);
    }
    return dx;
}

namespace {

Mat band_powers(const ModelParams& p, const Mat& front) {
    const SpectralBasis& sb = *p.basis();
    const std::size_t nb = sb.bins();
    if (static_cast<std::size_t>(front.cols()) != 2 * nb) throw ValidationError("front width mismatch");
    const double norm = power_norm(sb.samples);
    const auto& k = kernels::active();
    Mat power(front.rows(), static_cast<Eigen::Index>(kBands.size()));
    for (Eigen::Index c = 0; c < front.rows(); ++c) {
        const double* re = front.row(c).data();
        const double* im = re + nb;
        for (std::size_t j = 0; j < kBands.size(); ++j) {
            const auto [b0, b1] = sb.ranges[j];
            power(c, static_cast<Eigen::Index>(j)) = norm * (k.sum_sq(re + b0, b1 - b0) + k.sum_sq(im + b0, b1 - b0));
        }
    }
    return power;
}

}  // namespace

Mat log_band_powers(const ModelParams& p, const Mat& front) {
    if (p.arch() != Arch::BandPowerMLP) throw ValidationError("log_band_powers needs BandPowerMLP");
    Mat power = band_powers(p, front);
    return (power.array() + p.power_floor()).log().matrix();
}

Mat extractor_encode(const ModelParams& p, const Mat& front, EncodeCache* cache) {
    if (p.arch() == Arch::CompactCNN) return front;
    Mat power = band_powers(p, front);
    Mat code(power.rows(), power.cols());
    const Vec& mean = p.feature_mean();
    const Vec& scale = p.feature_scale();
    const double floor = p.power_floor();
    for (Eigen::Index i = 0; i < power.size(); ++i) {
        code.data()[i] = (std::log(power.data()[i] + floor) - mean(i)) * scale(i);
    }
    if (cache) {
        cache->front = front;
        cache->power = std::move(power);
    }
    return code;
}

Mat extractor_encode_backward(const ModelParams& p, const EncodeCache& cache, const Mat& dcode) {
    if (p.arch() == Arch::CompactCNN) return dcode;
    const SpectralBasis& sb = *p.basis();
    const std::size_t nb = sb.bins();
    const double norm2 = 2.0 * power_norm(sb.samples);
    const Vec& scale = p.feature_scale();
    const double floor = p.power_floor();
    Mat dfront = Mat::Zero(cache.front.rows(), cache.front.cols());
    for (Eigen::Index c = 0; c < cache.front.rows(); ++c) {
        const double* re = cache.front.row(c).data();
        const double* im = re + nb;
        double* dre = dfront.row(c).data();
        double* dim = dre + nb;
        for (std::size_t j = 0; j < kBands.size(); ++j) {
            const auto ji = static_cast<Eigen::Index>(j);
            const Eigen::Index flat = c * static_cast<Eigen::Index>(kBands.size()) + ji;
            const double dpower = dcode(c, ji) * scale(flat) / (cache.power(c, ji) + floor);
            const auto [b0, b1] = sb.ranges[j];
            for (std::size_t b = b0; b < b1; ++b) {
                dre[b] = dpower * norm2 * re[b];
                dim[b] = dpower * norm2 * im[b];
            }
        }
    }
    return dfront;
}

Vec extractor_trainable_forward(const ModelParams& p, const Mat& code, TrainableCache* cache) {
    Vec feat = p.arch() == Arch::BandPowerMLP ? detail::mlp_forward(p, code, cache) : detail::cnn_forward(p, code, cache);
    if (cache) {
        cache->revision = p.revision();
        cache->valid = true;
    }
    return feat;
}

Mat extractor_trainable_backward(const ModelParams& p, const TrainableCache& cache, const Vec& dfeat,
                                 std::vector<double>* grads, bool want_input_grad) {
    if (!cache.valid || cache.revision != p.revision()) {
        throw ValidationError("stale forward cache: parameters changed since the forward pass");
    }
    if (static_cast<std::size_t>(dfeat.size()) != p.feature_width()) throw ValidationError("dfeat width mismatch");
    if (grads && grads->size() != p.block(Block::Extractor).values.size()) {
        throw ValidationError("extractor gradient buffer has the wrong size");
    }
    return p.arch() == Arch::BandPowerMLP ? detail::mlp_backward(p, cache, dfeat, grads, want_input_grad)
                                          : detail::cnn_backward(p, cache, dfeat, grads, want_input_grad);
}

Vec extractor_forward(const ModelParams& p, const Mat& x, ExtractorCache* cache) {
    const Mat front = extractor_front(p, x);
    const Mat code = extractor_encode(p, front, cache ? &cache->encode : nullptr);
    return extractor_trainable_forward(p, code, cache ? &cache->trainable : nullptr);
}

}  // namespace tdn::nn
