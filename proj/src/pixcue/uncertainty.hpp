#pragma once

#include <cstdint>

#include "pixcue/net.hpp"
#include "pixcue/quantize.hpp"
#include "pixcue/types.hpp"

namespace pixcue {

// Monte Carlo dropout settings. dropout_fraction == 0 is the degenerate
// "dropout disabled" case: every pass is identical, so both MC estimators
// return exactly zero maps.
struct McConfig {
  int passes = 50;
  double dropout_fraction = 0.2;
  uint64_t seed = 0;
};

// Per-pixel variance of the class-index distribution, divided by D-1.
UncertaintyMap exact_variance_map(const ProbabilityVolume& p);

// Cheap width estimate: count classes above 0.6 of the (3-point smoothed)
// peak, read the count as 2*sigma+1, return sigma^2/(D-1).
UncertaintyMap fast_variance_map(const ProbabilityVolume& p);

// Predictive variance across stochastic passes: population variance of the
// per-pass expectation images.
UncertaintyMap mc_dropout_variance(const KSpaceGrid& y_u, const SamplingMask& m,
                                   const NetParams& params, const McConfig& cfg);

// Averages the per-pass probability volumes pixel-wise, then scores the
// averaged distribution with exact_variance_map.
UncertaintyMap mc_mean_distribution_variance(const KSpaceGrid& y_u, const SamplingMask& m,
                                             const NetParams& params, const McConfig& cfg);

// Per-pixel |recon - reference|.
RealImage error_map(const RealImage& recon, const RealImage& reference);

}  // namespace pixcue
