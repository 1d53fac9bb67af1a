#pragma once
// Thin FFTW wrappers shared by the spectral metrics and the generators.

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace tdn::fft {

// One-sided spectrum (n/2 + 1 bins) of a real signal.
std::vector<std::complex<double>> rfft(std::span<const double> x);
// Inverse of rfft for a signal of length n, including the 1/n factor.
std::vector<double> irfft(const std::vector<std::complex<double>>& spec, std::size_t n);

// Multiplies each bin by gain(f) and transforms back.
std::vector<double> shape_spectrum(std::span<const double> x, double fs, const std::function<double(double)>& gain);

}  // namespace tdn::fft
