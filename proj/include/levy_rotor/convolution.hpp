#pragma once

// Full linear convolution of finite sequences. Short kernels use the direct sum; longer ones go
// through FFTW. Output length is a.size() + b.size() - 1.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace levy_rotor {

// Kernels at least this long are convolved through the transform path.
inline constexpr std::size_t kDirectConvolutionLimit = 128;

std::vector<double> convolve_direct(std::span<const double> a, std::span<const double> b);
std::vector<double> convolve_fft(std::span<const double> a, std::span<const double> b);
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

std::vector<std::complex<double>> convolve_direct(std::span<const std::complex<double>> a,
                                                  std::span<const std::complex<double>> b);
std::vector<std::complex<double>> convolve_fft(std::span<const std::complex<double>> a,
                                               std::span<const std::complex<double>> b);
std::vector<std::complex<double>> convolve(std::span<const std::complex<double>> a,
                                           std::span<const std::complex<double>> b);

}  // namespace levy_rotor
