#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "pixcue/fft.hpp"
#include "pixcue/rng.hpp"

using namespace pixcue;

namespace {

// Independent oracle: literal double-sum DFT with the centered frequency
// grid (DC at N/2), unitary 1/N scaling.
KSpaceGrid direct_dft2_centered(const ComplexImage& img) {
  int n = img.rows;
  KSpaceGrid out(n, n);
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      cdouble acc{0.0, 0.0};
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          double ang = -2.0 * std::numbers::pi *
                       ((k - n / 2) * static_cast<double>(r) +
                        (l - n / 2) * static_cast<double>(c)) /
                       n;
          acc += img.at(r, c) * cdouble{std::cos(ang), std::sin(ang)};
        }
      }
      out.at(k, l) = acc / static_cast<double>(n);
    }
  }
  return out;
}

ComplexImage random_image(int n, uint64_t seed) {
  Rng rng(seed);
  ComplexImage img(n, n);
  for (cdouble& z : img.v) z = cdouble{rng.uniform(), rng.uniform()};
  return img;
}

double energy(const std::vector<cdouble>& v) {
  double e = 0.0;
  for (const cdouble& z : v) e += std::norm(z);
  return e;
}

}  // namespace

TEST_CASE("dft2 of zero image is zero") {
  ComplexImage img(8, 8);
  KSpaceGrid k = dft2_unitary(img);
  for (const cdouble& z : k.v) CHECK(std::abs(z) == 0.0);
}

TEST_CASE("dft2 of unit impulse at origin is constant 1/N") {
  ComplexImage img(8, 8);
  img.at(0, 0) = 1.0;
  KSpaceGrid k = dft2_unitary(img);
  for (const cdouble& z : k.v) {
    CHECK(z.real() == doctest::Approx(1.0 / 8.0).epsilon(1e-12));
    CHECK(std::abs(z.imag()) < 1e-12);
  }
}

TEST_CASE("dft2 matches the direct centered oracle") {
  for (int n : {8, 16}) {
    ComplexImage img = random_image(n, 42 + static_cast<uint64_t>(n));
    KSpaceGrid fast = dft2_unitary(img);
    KSpaceGrid slow = direct_dft2_centered(img);
    double max_err = 0.0;
    for (size_t i = 0; i < fast.v.size(); ++i)
      max_err = std::max(max_err, std::abs(fast.v[i] - slow.v[i]));
    CHECK(max_err < 1e-11);
  }
}

TEST_CASE("dft2 on a non-power-of-two even grid matches the oracle") {
  ComplexImage img = random_image(12, 7);
  KSpaceGrid fast = dft2_unitary(img);
  KSpaceGrid slow = direct_dft2_centered(img);
  double max_err = 0.0;
  for (size_t i = 0; i < fast.v.size(); ++i)
    max_err = std::max(max_err, std::abs(fast.v[i] - slow.v[i]));
  CHECK(max_err < 1e-11);
}

TEST_CASE("random 16x16 image preserves energy within 1e-10") {
  ComplexImage img = random_image(16, 99);
  KSpaceGrid k = dft2_unitary(img);
  CHECK(energy(k.v) / energy(img.v) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("unitarity holds over random images") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    ComplexImage img = random_image(16, 1000 + seed);
    KSpaceGrid k = dft2_unitary(img);
    double ei = energy(img.v);
    CHECK(std::abs(energy(k.v) - ei) <= 1e-9 * ei);
  }
}

TEST_CASE("roundtrip recovers the image within 1e-9") {
  for (int n : {8, 16, 32}) {
    Rng rng(5 + static_cast<uint64_t>(n));
    ComplexImage img(n, n);
    for (cdouble& z : img.v) z = cdouble{rng.uniform(), 0.0};  // values in [0,1]
    ComplexImage back = idft2_unitary(dft2_unitary(img));
    double max_err = 0.0;
    for (size_t i = 0; i < img.v.size(); ++i)
      max_err = std::max(max_err, std::abs(img.v[i] - back.v[i]));
    CHECK(max_err <= 1e-9);
  }
}

TEST_CASE("idft2 of zero grid is zero and of constant 1/N is an impulse") {
  KSpaceGrid zero(8, 8);
  ComplexImage img = idft2_unitary(zero);
  for (const cdouble& z : img.v) CHECK(std::abs(z) == 0.0);

  KSpaceGrid constant(8, 8);
  for (cdouble& z : constant.v) z = cdouble{1.0 / 8.0, 0.0};
  ComplexImage impulse = idft2_unitary(constant);
  CHECK(impulse.at(0, 0).real() == doctest::Approx(1.0).epsilon(1e-12));
  double rest = 0.0;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c)
      if (r || c) rest = std::max(rest, std::abs(impulse.at(r, c)));
  CHECK(rest < 1e-12);
}

TEST_CASE("adjointness: <Fa,b> == <a,F^H b>") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    ComplexImage a = random_image(16, 2000 + seed);
    KSpaceGrid b_grid(16, 16);
    {
      Rng rng(3000 + seed);
      for (cdouble& z : b_grid.v) z = cdouble{rng.uniform() - 0.5, rng.uniform() - 0.5};
    }
    KSpaceGrid fa = dft2_unitary(a);
    ComplexImage fhb = idft2_unitary(b_grid);
    cdouble lhs{0.0, 0.0}, rhs{0.0, 0.0};
    for (size_t i = 0; i < fa.v.size(); ++i) {
      lhs += fa.v[i] * std::conj(b_grid.v[i]);
      rhs += a.v[i] * std::conj(fhb.v[i]);
    }
    CHECK(std::abs(lhs - rhs) < 1e-9);
  }
}

TEST_CASE("dft2 rejects bad input") {
  ComplexImage rect(4, 8);
  CHECK_THROWS_AS(dft2_unitary(rect), std::invalid_argument);

  ComplexImage odd(7, 7);
  CHECK_THROWS_AS(dft2_unitary(odd), std::invalid_argument);

  ComplexImage nan_img(8, 8);
  nan_img.at(1, 1) = cdouble{std::nan(""), 0.0};
  CHECK_THROWS_AS(dft2_unitary(nan_img), std::invalid_argument);
}
