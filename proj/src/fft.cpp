#include "fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

namespace tdn::fft {
namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

std::vector<std::complex<double>> rfft(std::span<const double> x) {
    const std::size_t n = x.size();
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard lock(plan_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    std::memcpy(in, x.data(), n * sizeof(double));
    fftw_execute(plan);
    std::vector<std::complex<double>> spec(n / 2 + 1);
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] = {out[i][0], out[i][1]};
    {
        std::lock_guard lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return spec;
}

std::vector<double> irfft(const std::vector<std::complex<double>>& spec, std::size_t n) {
    fftw_complex* in = fftw_alloc_complex(n / 2 + 1);
    double* out = fftw_alloc_real(n);
    fftw_plan plan;
    {
        std::lock_guard lock(plan_mutex());
        plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    for (std::size_t i = 0; i < n / 2 + 1; ++i) {
        in[i][0] = spec[i].real();
        in[i][1] = spec[i].imag();
    }
    fftw_execute(plan);
    std::vector<double> x(out, out + n);
    for (double& v : x) v /= static_cast<double>(n);
    {
        std::lock_guard lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return x;
}

std::vector<double> shape_spectrum(std::span<const double> x, double fs, const std::function<double(double)>& gain) {
    auto spec = rfft(x);
    const double df = fs / static_cast<double>(x.size());
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= gain(static_cast<double>(i) * df);
    return irfft(spec, x.size());
}

}  // namespace tdn::fft
