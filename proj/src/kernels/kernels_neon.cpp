// AArch64 only; Advanced SIMD is mandatory there so no runtime probe is needed.
#include "taskdenoise/kernels.hpp"

#include <arm_neon.h>

namespace tdn::kernels::neon {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

double sum_sq(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t v = vld1q_f64(x + i);
        acc = vfmaq_f64(acc, v, v);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += x[i] * x[i];
    return s;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vfmaq_f64(acc, d, d);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

const KernelTable& table() {
    static const KernelTable t{Isa::Neon, "neon", dot, axpy, scale, sum_sq, sum_sq_diff};
    return t;
}

}  // namespace tdn::kernels::neon
