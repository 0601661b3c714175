#include "pixcue/uncertainty.hpp"

#include <algorithm>
#include <cmath>

namespace pixcue {

UncertaintyMap exact_variance_map(const ProbabilityVolume& p) {
  validate_volume(p);
  UncertaintyMap out(p.rows, p.cols);
  double norm = 1.0 / (p.d - 1);
  for (size_t i = 0; i < p.num_pixels(); ++i) {
    const double* q = p.p.data() + i * p.d;
    double m1 = 0.0, m2 = 0.0;
    for (int c = 0; c < p.d; ++c) {
      m1 += c * q[c];
      m2 += static_cast<double>(c) * c * q[c];
    }
    out.v[i] = std::max(0.0, m2 - m1 * m1) * norm;
  }
  return out;
}

UncertaintyMap fast_variance_map(const ProbabilityVolume& p) {
  validate_volume(p);
  UncertaintyMap out(p.rows, p.cols);
  double norm = 1.0 / (p.d - 1);
  for (size_t i = 0; i < p.num_pixels(); ++i) {
    const double* q = p.p.data() + i * p.d;
    int cmax = 0;
    for (int c = 1; c < p.d; ++c)
      if (q[c] > q[cmax]) cmax = c;
    // 3-point peak smoothing; out-of-range neighbors are left out of the
    // average rather than zero-padded.
    double peak = q[cmax];
    int terms = 1;
    if (cmax - 1 >= 0) {
      peak += q[cmax - 1];
      ++terms;
    }
    if (cmax + 1 < p.d) {
      peak += q[cmax + 1];
      ++terms;
    }
    peak /= terms;
    double threshold = 0.6 * peak;
    int count = 0;
    for (int c = 0; c < p.d; ++c)
      if (q[c] > threshold) ++count;
    double sigma = 0.5 * (count - 1);
    out.v[i] = sigma * sigma * norm;
  }
  return out;
}

namespace {

void check_mc_config(const McConfig& cfg) {
  require(cfg.passes >= 2, "mc: pass count must be >= 2");
  require(cfg.dropout_fraction >= 0.0 && cfg.dropout_fraction < 1.0,
          "mc: dropout fraction must be in [0,1)");
}

ForwardMode pass_mode(const McConfig& cfg, int t) {
  return ForwardMode::with_dropout(cfg.dropout_fraction,
                                   derive_seed(cfg.seed, static_cast<uint64_t>(t)));
}

}  // namespace

UncertaintyMap mc_dropout_variance(const KSpaceGrid& y_u, const SamplingMask& m,
                                   const NetParams& params, const McConfig& cfg) {
  check_mc_config(cfg);
  if (cfg.dropout_fraction == 0.0) return UncertaintyMap(y_u.rows, y_u.cols, 0.0);

  std::vector<RealImage> recons;
  recons.reserve(static_cast<size_t>(cfg.passes));
  for (int t = 0; t < cfg.passes; ++t)
    recons.push_back(expectation_image(net_forward(y_u, m, params, pass_mode(cfg, t))));

  // Accumulate deviations from the first pass so identical passes cancel
  // exactly instead of leaving float residue.
  size_t npix = recons[0].size();
  double inv_t = 1.0 / static_cast<double>(cfg.passes);
  UncertaintyMap out(y_u.rows, y_u.cols);
  std::vector<double> mean_dev(npix, 0.0);
  for (const RealImage& r : recons)
    for (size_t i = 0; i < npix; ++i) mean_dev[i] += r.v[i] - recons[0].v[i];
  for (size_t i = 0; i < npix; ++i) mean_dev[i] *= inv_t;
  for (const RealImage& r : recons)
    for (size_t i = 0; i < npix; ++i) {
      double d = (r.v[i] - recons[0].v[i]) - mean_dev[i];
      out.v[i] += d * d;
    }
  for (size_t i = 0; i < npix; ++i) out.v[i] *= inv_t;
  return out;
}

UncertaintyMap mc_mean_distribution_variance(const KSpaceGrid& y_u, const SamplingMask& m,
                                             const NetParams& params, const McConfig& cfg) {
  check_mc_config(cfg);
  if (cfg.dropout_fraction == 0.0) return UncertaintyMap(y_u.rows, y_u.cols, 0.0);

  ProbabilityVolume mean = net_forward(y_u, m, params, pass_mode(cfg, 0));
  for (int t = 1; t < cfg.passes; ++t) {
    ProbabilityVolume vol = net_forward(y_u, m, params, pass_mode(cfg, t));
    for (size_t i = 0; i < mean.p.size(); ++i) mean.p[i] += vol.p[i];
  }
  double inv_t = 1.0 / static_cast<double>(cfg.passes);
  for (double& x : mean.p) x *= inv_t;
  return exact_variance_map(mean);
}

RealImage error_map(const RealImage& recon, const RealImage& reference) {
  require(recon.rows == reference.rows && recon.cols == reference.cols,
          "error_map: shape mismatch");
  RealImage out(recon.rows, recon.cols);
  for (size_t i = 0; i < out.size(); ++i)
    out.v[i] = std::abs(recon.v[i] - reference.v[i]);
  return out;
}

}  // namespace pixcue
