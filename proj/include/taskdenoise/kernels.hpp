#pragma once
// Dense f64 inner-loop kernels with scalar reference implementations and
// SIMD variants picked once at startup from the host CPU.
//
// TASKDENOISE_SIMD=scalar|avx2|neon|auto overrides the automatic choice.
// Within one process the selected table never changes, so results are
// bit-reproducible run to run on the same machine.

#include <cstddef>
#include <span>
#include <string_view>

namespace tdn::kernels {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
    Isa isa;
    const char* name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // x *= alpha
    void (*scale)(double alpha, double* x, std::size_t n);
    double (*sum_sq)(const double* x, std::size_t n);
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable* neon_table();

const KernelTable* table_for(Isa isa);
const KernelTable& active();
std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void scale(double alpha, std::span<double> x) {
    active().scale(alpha, x.data(), x.size());
}
inline double sum_sq(std::span<const double> x) {
    return active().sum_sq(x.data(), x.size());
}
inline double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
    return active().sum_sq_diff(a.data(), b.data(), a.size());
}

// y[r] = W[r,:] . x for a row-major rows x cols matrix.
inline void gemv(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y) {
    const auto& k = active();
    for (std::size_t r = 0; r < rows; ++r) y[r] = k.dot(w + r * cols, x, cols);
}

// x[:] += W^T d for a row-major rows x cols matrix.
inline void gemv_t_acc(const double* w, std::size_t rows, std::size_t cols, const double* d, double* x) {
    const auto& k = active();
    for (std::size_t r = 0; r < rows; ++r) {
        if (d[r] != 0.0) k.axpy(d[r], w + r * cols, x, cols);
    }
}

// G += d x^T
inline void outer_acc(const double* d, std::size_t rows, const double* x, std::size_t cols, double* g) {
    const auto& k = active();
    for (std::size_t r = 0; r < rows; ++r) {
        if (d[r] != 0.0) k.axpy(d[r], x, g + r * cols, cols);
    }
}

}  // namespace tdn::kernels
