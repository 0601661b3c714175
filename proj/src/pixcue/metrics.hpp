#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pixcue/types.hpp"

namespace pixcue {

// ||recon - ref||^2 / ||ref||^2
double nmse(const RealImage& recon, const RealImage& reference);

// 10*log10(peak^2 / MSE) with peak = max(reference); capped at 100 dB when
// the MSE is negligible so identical images stay finite.
double psnr_db(const RealImage& recon, const RealImage& reference);

// Mean SSIM over all fully-valid 7x7 uniform windows, K1=0.01, K2=0.03,
// L = max(reference) - min(reference).
double ssim(const RealImage& a, const RealImage& b);

// Sample Pearson correlation; throws on constant input.
double pearson(std::span<const double> a, std::span<const double> b);

struct BoolMask {
  int rows = 0;
  int cols = 0;
  std::vector<uint8_t> v;

  size_t count() const;
};

// Pixel is foreground iff intensity > threshold * max(reference).
BoolMask foreground_mask(const RealImage& reference, double threshold = 0.05);

struct JointSample {
  int row = 0;
  int col = 0;
  double a = 0.0;
  double b = 0.0;
};

// n distinct pixel locations drawn uniformly without replacement, optionally
// restricted to foreground.
std::vector<JointSample> sample_joint(const RealImage& map_a, const RealImage& map_b,
                                      size_t n, uint64_t seed,
                                      const BoolMask* foreground = nullptr);

enum class FitModel { kLinear, kExponential };

struct FitResult {
  FitModel model = FitModel::kLinear;
  // kLinear: y = c0 + c1*x. kExponential: y = c0 * exp(c1*x).
  double c0 = 0.0;
  double c1 = 0.0;
  double r_squared = 0.0;
};

// Least squares line; r_squared = 1 - SS_res/SS_tot, defined as 0 when the
// target is constant.
FitResult linear_fit(std::span<const double> x, std::span<const double> y);

// y = a*exp(b*x) by linear least squares on (x, ln y); R^2 is reported in
// log space. Requires strictly positive y.
FitResult exponential_fit(std::span<const double> x, std::span<const double> y);

// Mean of map values over foreground pixels (all pixels when mask is null).
double masked_mean(const RealImage& map, const BoolMask* mask = nullptr);

}  // namespace pixcue
