#include "taskdenoise/kernels.hpp"

namespace tdn::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double sum_sq_scalar(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
    return s;
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{Isa::Scalar,  "scalar",      dot_scalar,        axpy_scalar,
                                   scale_scalar, sum_sq_scalar, sum_sq_diff_scalar};
    return table;
}

}  // namespace tdn::kernels
