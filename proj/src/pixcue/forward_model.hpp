#pragma once

#include <cstdint>

#include "pixcue/fft.hpp"
#include "pixcue/mask.hpp"
#include "pixcue/types.hpp"

namespace pixcue {

// Zero-mean Gaussian noise of standard deviation `sigma` added independently
// to the real and imaginary parts of every k-space bin.
struct NoiseSpec {
  double sigma = 0.0;
  uint64_t seed = 0;
};

KSpaceGrid add_complex_noise(const KSpaceGrid& k, const NoiseSpec& spec);

// Inverse transform of undersampled k-space; the magnitude view is what the
// network sees as its input.
ComplexImage zero_filled(const KSpaceGrid& y_u);

}  // namespace pixcue
