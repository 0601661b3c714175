#include "pixcue/quantize.hpp"

#include <algorithm>
#include <cmath>

namespace pixcue {

void validate_volume(const ProbabilityVolume& p, double tol) {
  require(p.rows > 0 && p.cols > 0 && p.d > 0, "volume: empty");
  require(p.p.size() == static_cast<size_t>(p.rows) * p.cols * p.d,
          "volume: storage/shape mismatch");
  for (size_t i = 0; i < p.num_pixels(); ++i) {
    const double* q = p.p.data() + i * p.d;
    double sum = 0.0;
    for (int c = 0; c < p.d; ++c) {
      require(q[c] >= 0.0, "volume: negative probability");
      sum += q[c];
    }
    require(std::abs(sum - 1.0) <= tol, "volume: pixel distribution does not sum to 1");
  }
}

QuantizedImage quantize(const RealImage& img, int n_bits) {
  require(n_bits >= 1 && n_bits <= 16, "quantize: n_bits must be in [1,16]");
  QuantizedImage q;
  q.rows = img.rows;
  q.cols = img.cols;
  q.n_bits = n_bits;
  q.labels.resize(img.size());
  double dm1 = static_cast<double>((1 << n_bits) - 1);
  for (size_t i = 0; i < img.size(); ++i) {
    double x = std::clamp(img.v[i], 0.0, 1.0);
    q.labels[i] = static_cast<uint16_t>(std::floor(x * dm1 + 0.5));
  }
  return q;
}

ProbabilityVolume one_hot_target(const QuantizedImage& q) {
  ProbabilityVolume vol(q.rows, q.cols, q.num_classes());
  for (size_t i = 0; i < q.labels.size(); ++i) vol.p[i * vol.d + q.labels[i]] = 1.0;
  return vol;
}

RealImage expectation_image(const ProbabilityVolume& p) {
  validate_volume(p);
  RealImage out(p.rows, p.cols);
  double scale = 1.0 / (p.d - 1);
  for (size_t i = 0; i < p.num_pixels(); ++i) {
    const double* q = p.p.data() + i * p.d;
    double acc = 0.0;
    for (int c = 0; c < p.d; ++c) acc += c * q[c];
    out.v[i] = std::clamp(acc * scale, 0.0, 1.0);
  }
  return out;
}

std::pair<RealImage, double> cross_entropy(const ProbabilityVolume& p,
                                           const ProbabilityVolume& target) {
  require(p.rows == target.rows && p.cols == target.cols && p.d == target.d,
          "cross_entropy: shape mismatch");
  RealImage loss(p.rows, p.cols);
  double total = 0.0;
  for (size_t i = 0; i < p.num_pixels(); ++i) {
    const double* q = p.p.data() + i * p.d;
    const double* t = target.p.data() + i * p.d;
    double acc = 0.0;
    for (int c = 0; c < p.d; ++c) {
      if (t[c] == 0.0) continue;
      acc -= t[c] * std::log(std::max(q[c], kProbFloor));
    }
    loss.v[i] = acc;
    total += acc;
  }
  return {std::move(loss), total / static_cast<double>(loss.size())};
}

RealImage kl_divergence(const ProbabilityVolume& target, const ProbabilityVolume& p) {
  require(p.rows == target.rows && p.cols == target.cols && p.d == target.d,
          "kl_divergence: shape mismatch");
  RealImage out(p.rows, p.cols);
  for (size_t i = 0; i < p.num_pixels(); ++i) {
    const double* q = p.p.data() + i * p.d;
    const double* t = target.p.data() + i * p.d;
    double acc = 0.0;
    for (int c = 0; c < p.d; ++c) {
      if (t[c] == 0.0) continue;
      acc += t[c] * (std::log(t[c]) - std::log(std::max(q[c], kProbFloor)));
    }
    out.v[i] = acc;
  }
  return out;
}

}  // namespace pixcue
