#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pixcue/types.hpp"

namespace pixcue {

// Probabilities are clamped to this floor before any logarithm so losses stay
// finite; cross_entropy and kl_divergence share the clamp bit-for-bit.
inline constexpr double kProbFloor = 1e-12;

// Per-pixel intensity class indices in [0, 2^n_bits).
struct QuantizedImage {
  int rows = 0;
  int cols = 0;
  int n_bits = 8;
  std::vector<uint16_t> labels;

  int num_classes() const { return 1 << n_bits; }
  uint16_t at(int r, int c) const { return labels[static_cast<size_t>(r) * cols + c]; }
};

// Per-pixel length-D probability vectors, pixel-major so one pixel's
// distribution is contiguous.
struct ProbabilityVolume {
  int rows = 0;
  int cols = 0;
  int d = 0;
  std::vector<double> p;

  ProbabilityVolume() = default;
  ProbabilityVolume(int r, int c, int d_)
      : rows(r), cols(c), d(d_), p(static_cast<size_t>(r) * c * d_, 0.0) {}

  double* pixel(int r, int c) { return p.data() + (static_cast<size_t>(r) * cols + c) * d; }
  const double* pixel(int r, int c) const {
    return p.data() + (static_cast<size_t>(r) * cols + c) * d;
  }
  size_t num_pixels() const { return static_cast<size_t>(rows) * cols; }
};

// Throws if any pixel's distribution sums further than `tol` from one or has
// negative entries.
void validate_volume(const ProbabilityVolume& p, double tol = 1e-3);

// h = round_half_up(x * (D-1)) with x clamped to [0,1] first.
QuantizedImage quantize(const RealImage& img, int n_bits);

ProbabilityVolume one_hot_target(const QuantizedImage& q);

// Eq-style weighted average of class indices, scaled back to [0,1].
RealImage expectation_image(const ProbabilityVolume& p);

// Per-pixel -sum_c target(c) * log p(c) (natural log), plus the pixel mean.
std::pair<RealImage, double> cross_entropy(const ProbabilityVolume& p,
                                           const ProbabilityVolume& target);

// D_KL(target || p) per pixel with 0*log(0/q) := 0.
RealImage kl_divergence(const ProbabilityVolume& target, const ProbabilityVolume& p);

}  // namespace pixcue
