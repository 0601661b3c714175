#include "pixcue/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "pixcue/rng.hpp"

namespace pixcue {
namespace {

void check_same_shape(const RealImage& a, const RealImage& b, const char* what) {
  require(a.rows == b.rows && a.cols == b.cols, std::string(what) + ": shape mismatch");
  require(a.rows > 0 && a.cols > 0, std::string(what) + ": empty image");
}

}  // namespace

double nmse(const RealImage& recon, const RealImage& reference) {
  check_same_shape(recon, reference, "nmse");
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < recon.size(); ++i) {
    double d = recon.v[i] - reference.v[i];
    num += d * d;
    den += reference.v[i] * reference.v[i];
  }
  require(den > 0.0, "nmse: reference is identically zero");
  return num / den;
}

double psnr_db(const RealImage& recon, const RealImage& reference) {
  check_same_shape(recon, reference, "psnr");
  double peak = *std::max_element(reference.v.begin(), reference.v.end());
  require(peak > 0.0, "psnr: reference peak must be positive");
  double mse = 0.0;
  for (size_t i = 0; i < recon.size(); ++i) {
    double d = recon.v[i] - reference.v[i];
    mse += d * d;
  }
  mse /= static_cast<double>(recon.size());
  if (mse < peak * peak * 1e-10) return 100.0;
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const RealImage& a, const RealImage& b) {
  check_same_shape(a, b, "ssim");
  constexpr int kWin = 7;
  require(a.rows >= kWin && a.cols >= kWin, "ssim: image smaller than the 7x7 window");
  double lo = *std::min_element(b.v.begin(), b.v.end());
  double hi = *std::max_element(b.v.begin(), b.v.end());
  double l = hi - lo;
  require(l > 0.0, "ssim: constant reference has no dynamic range");
  double c1 = (0.01 * l) * (0.01 * l);
  double c2 = (0.03 * l) * (0.03 * l);

  const double inv_n = 1.0 / (kWin * kWin);
  double acc = 0.0;
  int windows = 0;
  for (int r0 = 0; r0 + kWin <= a.rows; ++r0) {
    for (int c0 = 0; c0 + kWin <= a.cols; ++c0) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int r = r0; r < r0 + kWin; ++r) {
        for (int c = c0; c < c0 + kWin; ++c) {
          double xa = a.at(r, c);
          double xb = b.at(r, c);
          sa += xa;
          sb += xb;
          saa += xa * xa;
          sbb += xb * xb;
          sab += xa * xb;
        }
      }
      double mu_a = sa * inv_n;
      double mu_b = sb * inv_n;
      double var_a = saa * inv_n - mu_a * mu_a;
      double var_b = sbb * inv_n - mu_b * mu_b;
      double cov = sab * inv_n - mu_a * mu_b;
      double val = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                   ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      acc += val;
      ++windows;
    }
  }
  return acc / windows;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "pearson: length mismatch");
  require(a.size() >= 2, "pearson: need at least two points");
  size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double da = a[i] - ma;
    double db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  require(saa > 0.0 && sbb > 0.0, "pearson: correlation undefined for constant input");
  return sab / std::sqrt(saa * sbb);
}

size_t BoolMask::count() const {
  size_t n = 0;
  for (uint8_t x : v) n += x != 0;
  return n;
}

BoolMask foreground_mask(const RealImage& reference, double threshold) {
  require(threshold >= 0.0, "foreground_mask: threshold must be >= 0");
  BoolMask m;
  m.rows = reference.rows;
  m.cols = reference.cols;
  m.v.resize(reference.size());
  double peak = reference.v.empty()
                    ? 0.0
                    : *std::max_element(reference.v.begin(), reference.v.end());
  double cut = threshold * peak;
  for (size_t i = 0; i < reference.size(); ++i) m.v[i] = reference.v[i] > cut ? 1 : 0;
  return m;
}

std::vector<JointSample> sample_joint(const RealImage& map_a, const RealImage& map_b,
                                      size_t n, uint64_t seed, const BoolMask* foreground) {
  check_same_shape(map_a, map_b, "sample_joint");
  if (foreground)
    require(foreground->rows == map_a.rows && foreground->cols == map_a.cols,
            "sample_joint: mask shape mismatch");

  std::vector<size_t> candidates;
  for (size_t i = 0; i < map_a.size(); ++i)
    if (!foreground || foreground->v[i]) candidates.push_back(i);
  require(n <= candidates.size(), "sample_joint: not enough candidate pixels");

  Rng rng(seed);
  std::vector<size_t> picked = rng.sample_without_replacement(candidates, n);
  std::vector<JointSample> out;
  out.reserve(n);
  for (size_t idx : picked) {
    JointSample s;
    s.row = static_cast<int>(idx / static_cast<size_t>(map_a.cols));
    s.col = static_cast<int>(idx % static_cast<size_t>(map_a.cols));
    s.a = map_a.v[idx];
    s.b = map_b.v[idx];
    out.push_back(s);
  }
  return out;
}

FitResult linear_fit(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "linear_fit: length mismatch");
  require(x.size() >= 2, "linear_fit: need at least two points");
  size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx;
    double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  require(sxx > 0.0, "linear_fit: x values are constant");

  FitResult fit;
  fit.model = FitModel::kLinear;
  fit.c1 = sxy / sxx;
  fit.c0 = my - fit.c1 * mx;
  if (syy <= 0.0) {
    fit.r_squared = 0.0;
    return fit;
  }
  double ss_res = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double r = y[i] - (fit.c0 + fit.c1 * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = 1.0 - ss_res / syy;
  return fit;
}

FitResult exponential_fit(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "exponential_fit: length mismatch");
  std::vector<double> log_y(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    require(y[i] > 0.0, "exponential_fit: y values must be positive");
    log_y[i] = std::log(y[i]);
  }
  FitResult lin = linear_fit(x, log_y);
  FitResult fit;
  fit.model = FitModel::kExponential;
  fit.c0 = std::exp(lin.c0);
  fit.c1 = lin.c1;
  fit.r_squared = lin.r_squared;
  return fit;
}

double masked_mean(const RealImage& map, const BoolMask* mask) {
  if (!mask) {
    require(map.size() > 0, "masked_mean: empty image");
    double acc = 0.0;
    for (double x : map.v) acc += x;
    return acc / static_cast<double>(map.size());
  }
  require(mask->rows == map.rows && mask->cols == map.cols, "masked_mean: shape mismatch");
  double acc = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < map.size(); ++i)
    if (mask->v[i]) {
      acc += map.v[i];
      ++n;
    }
  require(n > 0, "masked_mean: empty mask");
  return acc / static_cast<double>(n);
}

}  // namespace pixcue
