#include <cmath>

#include "doctest.h"
#include "pixcue/fft.hpp"
#include "pixcue/mask.hpp"
#include "pixcue/phantom.hpp"
#include "pixcue/rng.hpp"
#include "pixcue/uncertainty.hpp"

using namespace pixcue;

namespace {

ProbabilityVolume one_hot_pixel(int d, int cls) {
  ProbabilityVolume vol(1, 1, d);
  vol.p[static_cast<size_t>(cls)] = 1.0;
  return vol;
}

ProbabilityVolume discrete_gaussian(int d, double mu, double sigma) {
  ProbabilityVolume vol(1, 1, d);
  double sum = 0.0;
  for (int c = 0; c < d; ++c) {
    double z = (c - mu) / sigma;
    vol.p[static_cast<size_t>(c)] = std::exp(-0.5 * z * z);
    sum += vol.p[static_cast<size_t>(c)];
  }
  for (double& p : vol.p) p /= sum;
  return vol;
}

// Independent oracles reproducing the fast-width procedure and the exact
// moments by direct summation.
int counting_oracle(const ProbabilityVolume& vol) {
  int d = vol.d;
  const double* p = vol.p.data();
  int cmax = 0;
  for (int c = 1; c < d; ++c)
    if (p[c] > p[cmax]) cmax = c;
  double peak = p[cmax];
  int terms = 1;
  if (cmax > 0) {
    peak += p[cmax - 1];
    ++terms;
  }
  if (cmax + 1 < d) {
    peak += p[cmax + 1];
    ++terms;
  }
  peak /= terms;
  int count = 0;
  for (int c = 0; c < d; ++c)
    if (p[c] > 0.6 * peak) ++count;
  return count;
}

double exact_variance_oracle(const ProbabilityVolume& vol) {
  double m1 = 0.0, m2 = 0.0;
  for (int c = 0; c < vol.d; ++c) {
    m1 += c * vol.p[static_cast<size_t>(c)];
    m2 += static_cast<double>(c) * c * vol.p[static_cast<size_t>(c)];
  }
  return m2 - m1 * m1;
}

struct McSetup {
  KSpaceGrid y_u;
  SamplingMask mask;
  NetParams params;
};

McSetup mc_setup(uint64_t seed) {
  McSetup s;
  int n = 16;
  PhantomSpec spec;
  spec.size = n;
  spec.ellipses = {{0.5, 0.5, 0.35, 0.40, 0.0, 0.7, Blend::kAdd},
                   {0.45, 0.45, 0.12, 0.18, 0.4, -0.3, Blend::kAdd}};
  ComplexImage img = generate_phantom(spec, seed);
  s.mask = make_mask_random(n, 2.0, 0.125, seed + 1);
  s.y_u = undersample(dft2_unitary(img), s.mask);
  s.params = init_params(NetArch{2, 4, 16}, seed + 2);
  return s;
}

}  // namespace

TEST_CASE("exact variance: one-hot distributions carry zero uncertainty") {
  for (int cls : {0, 17, 255}) {
    UncertaintyMap u = exact_variance_map(one_hot_pixel(256, cls));
    CHECK(u.v[0] == 0.0);
  }
}

TEST_CASE("exact variance of the uniform distribution over 256 classes") {
  ProbabilityVolume vol(1, 1, 256);
  for (double& p : vol.p) p = 1.0 / 256.0;
  // direct-sum oracle and the closed form (D^2-1)/12
  double var = exact_variance_oracle(vol);
  CHECK(var == doctest::Approx((256.0 * 256.0 - 1.0) / 12.0).epsilon(1e-10));
  CHECK(var == doctest::Approx(5461.25).epsilon(1e-10));
  UncertaintyMap u = exact_variance_map(vol);
  CHECK(u.v[0] == doctest::Approx(var / 255.0).epsilon(1e-10));
  CHECK(u.v[0] == doctest::Approx(21.4167).epsilon(1e-4));
}

TEST_CASE("exact variance of half mass at 100 and 200") {
  ProbabilityVolume vol(1, 1, 256);
  vol.p[100] = 0.5;
  vol.p[200] = 0.5;
  CHECK(exact_variance_oracle(vol) == doctest::Approx(2500.0).epsilon(1e-12));
  UncertaintyMap u = exact_variance_map(vol);
  CHECK(u.v[0] == doctest::Approx(2500.0 / 255.0).epsilon(1e-12));
  CHECK(u.v[0] == doctest::Approx(9.8039).epsilon(1e-4));
}

TEST_CASE("exact variance is non-negative and shift equivariant") {
  ProbabilityVolume base = discrete_gaussian(256, 80.0, 7.0);
  UncertaintyMap u0 = exact_variance_map(base);
  CHECK(u0.v[0] > 0.0);
  for (int shift : {10, 40, 90}) {
    ProbabilityVolume moved(1, 1, 256);
    for (int c = 0; c < 256; ++c) {
      int src = c - shift;
      moved.p[static_cast<size_t>(c)] =
          (src >= 0 && src < 256) ? base.p[static_cast<size_t>(src)] : 0.0;
    }
    double sum = 0.0;
    for (double p : moved.p) sum += p;
    for (double& p : moved.p) p /= sum;
    UncertaintyMap u = exact_variance_map(moved);
    CHECK(u.v[0] == doctest::Approx(u0.v[0]).epsilon(1e-6));
  }
}

TEST_CASE("fast variance: one-hot counts a single class") {
  UncertaintyMap u = fast_variance_map(one_hot_pixel(256, 99));
  CHECK(u.v[0] == 0.0);
}

TEST_CASE("fast variance on the sigma=5 discrete Gaussian") {
  ProbabilityVolume vol = discrete_gaussian(256, 128.0, 5.0);
  CHECK(counting_oracle(vol) == 11);  // classes 123..133
  UncertaintyMap u = fast_variance_map(vol);
  CHECK(u.v[0] == doctest::Approx(25.0 / 255.0).epsilon(1e-12));
  CHECK(u.v[0] == doctest::Approx(0.09804).epsilon(1e-3));
  // exact-variance oracle for comparison: sigma^2 ~= 25
  CHECK(exact_variance_oracle(vol) == doctest::Approx(25.0).epsilon(0.01));
}

TEST_CASE("fast variance on the sigma=2 Gaussian centered at 50") {
  ProbabilityVolume vol = discrete_gaussian(256, 50.0, 2.0);
  CHECK(counting_oracle(vol) == 5);
  UncertaintyMap u = fast_variance_map(vol);
  CHECK(u.v[0] == doctest::Approx(4.0 / 255.0).epsilon(1e-12));
  CHECK(u.v[0] == doctest::Approx(0.01569).epsilon(1e-3));
}

TEST_CASE("fast width tracks the true sigma within one class") {
  for (int sigma = 2; sigma <= 20; ++sigma) {
    ProbabilityVolume vol = discrete_gaussian(256, 128.0, sigma);
    UncertaintyMap u = fast_variance_map(vol);
    double sigma_hat = std::sqrt(u.v[0] * 255.0);
    CHECK(std::abs(sigma_hat - sigma) <= 1.0);
  }
}

TEST_CASE("fast variance: boundary peaks average existing neighbors only") {
  // mass concentrated at class 0: peak smoothing must not zero-pad
  ProbabilityVolume vol(1, 1, 16);
  vol.p[0] = 0.9;
  vol.p[1] = 0.1;
  UncertaintyMap u = fast_variance_map(vol);
  // smoothed peak = (0.9 + 0.1)/2 = 0.5; threshold 0.3; only class 0 exceeds
  CHECK(u.v[0] == 0.0);
}

TEST_CASE("mc variance: Eq-5 algebra for two passes and determinism") {
  McSetup s = mc_setup(100);
  McConfig cfg{2, 0.3, 42};
  UncertaintyMap u = mc_dropout_variance(s.y_u, s.mask, s.params, cfg);

  // manual recompute with the same derived per-pass seeds
  RealImage a = expectation_image(net_forward(
      s.y_u, s.mask, s.params, ForwardMode::with_dropout(0.3, derive_seed(42, 0))));
  RealImage b = expectation_image(net_forward(
      s.y_u, s.mask, s.params, ForwardMode::with_dropout(0.3, derive_seed(42, 1))));
  for (size_t i = 0; i < u.size(); ++i) {
    double d = 0.5 * (a.v[i] - b.v[i]);
    CHECK(u.v[i] == doctest::Approx(d * d).epsilon(1e-9));
  }

  UncertaintyMap again = mc_dropout_variance(s.y_u, s.mask, s.params, cfg);
  CHECK(u.v == again.v);
}

TEST_CASE("mc variance is invariant to pass ordering") {
  McSetup s = mc_setup(200);
  McConfig cfg{4, 0.25, 7};
  UncertaintyMap u = mc_dropout_variance(s.y_u, s.mask, s.params, cfg);

  std::vector<RealImage> recons;
  for (int t = 3; t >= 0; --t)
    recons.push_back(expectation_image(net_forward(
        s.y_u, s.mask, s.params,
        ForwardMode::with_dropout(0.25, derive_seed(7, static_cast<uint64_t>(t))))));
  for (size_t i = 0; i < u.size(); ++i) {
    double mean = 0.0;
    for (const RealImage& r : recons) mean += r.v[i];
    mean /= 4.0;
    double var = 0.0;
    for (const RealImage& r : recons) var += (r.v[i] - mean) * (r.v[i] - mean);
    var /= 4.0;
    CHECK(u.v[i] == doctest::Approx(var).epsilon(1e-9));
  }
}

TEST_CASE("both MC variants return exactly zero maps when dropout is disabled") {
  McSetup s = mc_setup(300);
  McConfig cfg{3, 0.0, 5};
  UncertaintyMap u1 = mc_dropout_variance(s.y_u, s.mask, s.params, cfg);
  UncertaintyMap u2 = mc_mean_distribution_variance(s.y_u, s.mask, s.params, cfg);
  for (double x : u1.v) CHECK(x == 0.0);
  for (double x : u2.v) CHECK(x == 0.0);
}

TEST_CASE("mc rejects fewer than two passes") {
  McSetup s = mc_setup(400);
  CHECK_THROWS_AS(mc_dropout_variance(s.y_u, s.mask, s.params, {1, 0.2, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(mc_mean_distribution_variance(s.y_u, s.mask, s.params, {1, 0.2, 0}),
                  std::invalid_argument);
}

TEST_CASE("mean-distribution variant averages volumes then scores them") {
  McSetup s = mc_setup(500);
  McConfig cfg{3, 0.3, 11};
  UncertaintyMap u = mc_mean_distribution_variance(s.y_u, s.mask, s.params, cfg);

  ProbabilityVolume mean(16, 16, 16);
  for (int t = 0; t < 3; ++t) {
    ProbabilityVolume vol = net_forward(
        s.y_u, s.mask, s.params,
        ForwardMode::with_dropout(0.3, derive_seed(11, static_cast<uint64_t>(t))));
    for (size_t i = 0; i < mean.p.size(); ++i) mean.p[i] += vol.p[i] / 3.0;
  }
  // averaging preserves normalization
  for (size_t i = 0; i < mean.num_pixels(); ++i) {
    double sum = 0.0;
    for (int c = 0; c < mean.d; ++c) sum += mean.p[i * mean.d + c];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
  UncertaintyMap expected = exact_variance_map(mean);
  for (size_t i = 0; i < u.size(); ++i)
    CHECK(u.v[i] == doctest::Approx(expected.v[i]).epsilon(1e-9));
}

TEST_CASE("averaging two distant one-hots reproduces the half/half variance") {
  ProbabilityVolume a = one_hot_pixel(256, 100);
  ProbabilityVolume b = one_hot_pixel(256, 200);
  ProbabilityVolume mean(1, 1, 256);
  for (size_t i = 0; i < mean.p.size(); ++i) mean.p[i] = 0.5 * (a.p[i] + b.p[i]);
  UncertaintyMap u = exact_variance_map(mean);
  CHECK(u.v[0] == doctest::Approx(9.8039).epsilon(1e-4));
}

TEST_CASE("identical one-hot passes average to zero uncertainty") {
  ProbabilityVolume a = one_hot_pixel(256, 37);
  ProbabilityVolume mean(1, 1, 256);
  for (size_t i = 0; i < mean.p.size(); ++i) mean.p[i] = a.p[i];
  CHECK(exact_variance_map(mean).v[0] == 0.0);
}

TEST_CASE("error map") {
  RealImage ref(8, 8, 0.4);
  CHECK(error_map(ref, ref).v == RealImage(8, 8, 0.0).v);

  RealImage shifted = ref;
  for (double& x : shifted.v) x += 0.1;
  for (double x : error_map(shifted, ref).v) CHECK(x == doctest::Approx(0.1).epsilon(1e-12));

  Rng rng(1);
  RealImage a(8, 8), b(8, 8);
  for (double& x : a.v) x = rng.uniform();
  for (double& x : b.v) x = rng.uniform();
  RealImage e = error_map(a, b);
  for (size_t i = 0; i < e.size(); ++i)
    CHECK(e.v[i] == doctest::Approx(std::abs(a.v[i] - b.v[i])).epsilon(1e-15));

  RealImage wrong(4, 4);
  CHECK_THROWS_AS(error_map(a, wrong), std::invalid_argument);
}
