#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "pixcue/fft.hpp"
#include "pixcue/forward_model.hpp"
#include "pixcue/mask.hpp"
#include "pixcue/phantom.hpp"
#include "pixcue/rng.hpp"

using namespace pixcue;

TEST_CASE("equidistant mask with no acceleration samples every line") {
  SamplingMask m = make_mask_equidistant(16, 1.0, 0.0);
  CHECK(m.lines.size() == 16);
  for (int i = 0; i < 16; ++i) CHECK(m.lines[static_cast<size_t>(i)] == i);
}

TEST_CASE("equidistant mask: center block exhausts the budget") {
  SamplingMask m = make_mask_equidistant(16, 4.0, 0.25);
  CHECK(m.lines == std::vector<int>{6, 7, 8, 9});
}

TEST_CASE("equidistant mask at N=256 R=4 f=0.08: 20 center + 44 strided") {
  SamplingMask m = make_mask_equidistant(256, 4.0, 0.08);
  // Enumerate what the generator must contain: the 20-line center block.
  int center_count = 0;
  for (int line = 118; line <= 137; ++line)
    center_count += std::count(m.lines.begin(), m.lines.end(), line);
  CHECK(center_count == 20);
  CHECK(m.lines.size() == 64);
  std::set<int> unique(m.lines.begin(), m.lines.end());
  CHECK(unique.size() == 64);
}

TEST_CASE("random mask is deterministic in the seed") {
  SamplingMask a = make_mask_random(64, 4.0, 0.08, 123);
  SamplingMask b = make_mask_random(64, 4.0, 0.08, 123);
  SamplingMask c = make_mask_random(64, 4.0, 0.08, 124);
  CHECK(a.lines == b.lines);
  CHECK(a.lines != c.lines);
}

TEST_CASE("random mask with R=1 is full regardless of seed") {
  for (uint64_t seed : {0ull, 7ull, 99ull}) {
    SamplingMask m = make_mask_random(32, 1.0, 0.0, seed);
    CHECK(m.lines.size() == 32);
  }
}

TEST_CASE("random mask at N=256 R=4 f=0.08 keeps the center block") {
  SamplingMask m = make_mask_random(256, 4.0, 0.08, 555);
  CHECK(m.lines.size() == 64);
  for (int line = 118; line <= 137; ++line)
    CHECK(std::find(m.lines.begin(), m.lines.end(), line) != m.lines.end());
}

TEST_CASE("mask generators satisfy the size law") {
  for (double accel : {1.0, 2.0, 4.0, 6.0, 8.5}) {
    for (double cf : {0.0, 0.06, 0.08, 0.25, 0.5}) {
      for (int n : {16, 64, 256}) {
        auto [start, count] = center_line_block(n, cf);
        size_t expected =
            static_cast<size_t>(std::max<long long>(count, static_cast<long long>(
                                                               std::floor(n / accel))));
        SamplingMask eq = make_mask_equidistant(n, accel, cf);
        SamplingMask rnd = make_mask_random(n, accel, cf, 17);
        CHECK(eq.lines.size() == expected);
        CHECK(rnd.lines.size() == expected);
        for (int i = 0; i < count; ++i) {
          CHECK(std::find(eq.lines.begin(), eq.lines.end(), start + i) != eq.lines.end());
          CHECK(std::find(rnd.lines.begin(), rnd.lines.end(), start + i) !=
                rnd.lines.end());
        }
      }
    }
  }
}

TEST_CASE("mask generator input validation") {
  CHECK_THROWS_AS(make_mask_equidistant(16, 0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_mask_equidistant(16, 4.0, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(make_mask_equidistant(16, 4.0, 1.5), std::invalid_argument);
}

TEST_CASE("undersample keeps sampled rows and zeroes the rest") {
  KSpaceGrid k(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) k.at(r, c) = cdouble{r + 1.0, c + 1.0};

  SamplingMask m;
  m.n_lines = 4;
  m.lines = {0};
  KSpaceGrid out = undersample(k, m);
  for (int c = 0; c < 4; ++c) CHECK(out.at(0, c) == k.at(0, c));
  for (int r = 1; r < 4; ++r)
    for (int c = 0; c < 4; ++c) CHECK(out.at(r, c) == cdouble{0.0, 0.0});
}

TEST_CASE("undersample: full mask is identity, empty mask zeroes everything") {
  Rng rng(9);
  KSpaceGrid k(8, 8);
  for (cdouble& z : k.v) z = cdouble{rng.uniform(), rng.uniform()};

  SamplingMask full;
  full.n_lines = 8;
  for (int i = 0; i < 8; ++i) full.lines.push_back(i);
  CHECK(undersample(k, full).v == k.v);

  SamplingMask empty;
  empty.n_lines = 8;
  for (const cdouble& z : undersample(k, empty).v) CHECK(z == cdouble{0.0, 0.0});
}

TEST_CASE("undersample is idempotent") {
  Rng rng(10);
  KSpaceGrid k(16, 16);
  for (cdouble& z : k.v) z = cdouble{rng.uniform(), rng.uniform()};
  SamplingMask m = make_mask_random(16, 2.0, 0.1, 3);
  KSpaceGrid once = undersample(k, m);
  KSpaceGrid twice = undersample(once, m);
  CHECK(once.v == twice.v);
}

TEST_CASE("undersample rejects dimension mismatch") {
  KSpaceGrid k(8, 8);
  SamplingMask m;
  m.n_lines = 16;
  m.lines = {0, 1};
  CHECK_THROWS_AS(undersample(k, m), std::invalid_argument);
}

TEST_CASE("noise: sigma 0 is identity, same seed reproduces bit patterns") {
  Rng rng(11);
  KSpaceGrid k(16, 16);
  for (cdouble& z : k.v) z = cdouble{rng.uniform(), rng.uniform()};

  KSpaceGrid same = add_complex_noise(k, {0.0, 42});
  CHECK(same.v == k.v);

  KSpaceGrid a = add_complex_noise(k, {0.01, 42});
  KSpaceGrid b = add_complex_noise(k, {0.01, 42});
  CHECK(a.v == b.v);
  KSpaceGrid c = add_complex_noise(k, {0.01, 43});
  CHECK(a.v != c.v);
}

TEST_CASE("noise: empirical std over 65536 draws within 5% of sigma") {
  KSpaceGrid k(256, 256);
  double sigma = 0.01;
  KSpaceGrid noisy = add_complex_noise(k, {sigma, 7});
  double acc = 0.0;
  for (const cdouble& z : noisy.v) acc += z.real() * z.real();
  double emp_std = std::sqrt(acc / static_cast<double>(noisy.v.size()));
  CHECK(emp_std == doctest::Approx(sigma).epsilon(0.05));
}

TEST_CASE("noise rejects negative sigma") {
  KSpaceGrid k(8, 8);
  CHECK_THROWS_AS(add_complex_noise(k, {-0.1, 0}), std::invalid_argument);
}

TEST_CASE("zero_filled: full mask roundtrips, zero grid maps to zero") {
  PhantomSpec spec;
  spec.size = 32;
  spec.ellipses = {{0.5, 0.5, 0.3, 0.4, 0.0, 0.8, Blend::kAdd}};
  ComplexImage phantom = generate_phantom(spec, 0);
  KSpaceGrid y = dft2_unitary(phantom);

  SamplingMask full;
  full.n_lines = 32;
  for (int i = 0; i < 32; ++i) full.lines.push_back(i);
  ComplexImage back = zero_filled(undersample(y, full));
  double max_err = 0.0;
  for (size_t i = 0; i < back.v.size(); ++i)
    max_err = std::max(max_err, std::abs(back.v[i] - phantom.v[i]));
  CHECK(max_err <= 1e-9);

  ComplexImage from_zero = zero_filled(KSpaceGrid(32, 32));
  for (const cdouble& z : from_zero.v) CHECK(std::abs(z) == 0.0);
}

TEST_CASE("zero_filled under a half mask aliases and loses energy") {
  PhantomSpec spec;
  spec.size = 32;
  spec.ellipses = {{0.5, 0.5, 0.3, 0.4, 0.0, 0.8, Blend::kAdd},
                   {0.45, 0.4, 0.1, 0.15, 0.3, -0.3, Blend::kAdd}};
  ComplexImage phantom = generate_phantom(spec, 0);
  KSpaceGrid y = dft2_unitary(phantom);
  SamplingMask half;
  half.n_lines = 32;
  for (int i = 0; i < 32; i += 2) half.lines.push_back(i);
  ComplexImage zf = zero_filled(undersample(y, half));

  double e_full = 0.0, e_zf = 0.0, diff = 0.0;
  for (size_t i = 0; i < zf.v.size(); ++i) {
    e_full += std::norm(phantom.v[i]);
    e_zf += std::norm(zf.v[i]);
    diff = std::max(diff, std::abs(zf.v[i] - phantom.v[i]));
  }
  CHECK(e_zf <= e_full);
  CHECK(diff > 1e-3);  // visible aliasing
}
