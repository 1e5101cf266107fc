#pragma once

#include <span>
#include <vector>

#include "ppe/common.hpp"

// Thin wrapper over FFTW. Plans are cached per length and shared between
// threads; execution uses the new-array interface, which is thread safe.
namespace ppe::fft {

/// Unnormalized forward DFT, kernel exp(-j 2 pi k n / N), in place.
void forward(std::span<Complex> data);

/// Inverse DFT scaled by 1/N, in place.
void inverse(std::span<Complex> data);

/// Angular frequency (rad/s) of each DFT bin in FFTW ordering.
std::vector<double> angular_frequencies(std::size_t n, double sample_period);

/// Version string of the linked FFT library.
const char* library_version();

}  // namespace ppe::fft
