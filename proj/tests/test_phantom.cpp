#include <cmath>

#include "doctest.h"
#include "pixcue/phantom.hpp"

using namespace pixcue;

TEST_CASE("empty ellipse list yields a zero image") {
  PhantomSpec spec;
  spec.size = 16;
  ComplexImage img = generate_phantom(spec, 0);
  for (const cdouble& z : img.v) CHECK(z == cdouble{0.0, 0.0});
}

TEST_CASE("single centered ellipse fills interior with its intensity") {
  PhantomSpec spec;
  spec.size = 32;
  spec.ellipses = {{0.5, 0.5, 0.3, 0.3, 0.0, 0.8, Blend::kAdd}};
  ComplexImage img = generate_phantom(spec, 0);
  CHECK(img.at(16, 16).real() == doctest::Approx(0.8));
  CHECK(img.at(0, 0).real() == 0.0);
  for (const cdouble& z : img.v) CHECK(z.imag() == 0.0);
}

TEST_CASE("overlapping additive ellipses clamp to 1") {
  PhantomSpec spec;
  spec.size = 32;
  spec.ellipses = {{0.5, 0.5, 0.3, 0.3, 0.0, 0.7, Blend::kAdd},
                   {0.5, 0.5, 0.2, 0.2, 0.0, 0.6, Blend::kAdd}};
  ComplexImage img = generate_phantom(spec, 0);
  CHECK(img.at(16, 16).real() == 1.0);
}

TEST_CASE("replace blend overwrites instead of accumulating") {
  PhantomSpec spec;
  spec.size = 32;
  spec.ellipses = {{0.5, 0.5, 0.3, 0.3, 0.0, 0.9, Blend::kAdd},
                   {0.5, 0.5, 0.15, 0.15, 0.0, 0.2, Blend::kReplace}};
  ComplexImage img = generate_phantom(spec, 0);
  CHECK(img.at(16, 16).real() == doctest::Approx(0.2));
}

TEST_CASE("contrast profiles are monotone remaps of [0,1]") {
  for (const char* profile : {"identity", "t1", "t2", "flair"}) {
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
      double x = i / 100.0;
      double y = apply_contrast(profile, x);
      CHECK(y >= prev);
      CHECK(y >= 0.0);
      CHECK(y <= 1.0);
      prev = y;
    }
    CHECK(apply_contrast(profile, 0.0) == doctest::Approx(0.0));
    CHECK(apply_contrast(profile, 1.0) == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(apply_contrast("bogus", 0.5), std::invalid_argument);
}

TEST_CASE("jitter varies the rendering deterministically") {
  PhantomSpec spec;
  spec.size = 32;
  spec.jitter = 0.4;
  spec.ellipses = {{0.5, 0.5, 0.25, 0.3, 0.0, 0.7, Blend::kAdd}};
  ComplexImage a = generate_phantom(spec, 1);
  ComplexImage b = generate_phantom(spec, 1);
  ComplexImage c = generate_phantom(spec, 2);
  CHECK(a.v == b.v);
  CHECK(a.v != c.v);

  // jitter 0 must reproduce the un-jittered layout regardless of seed
  spec.jitter = 0.0;
  CHECK(generate_phantom(spec, 1).v == generate_phantom(spec, 99).v);
}

TEST_CASE("anomaly outside the image bounds leaves the image unchanged") {
  PhantomSpec spec;
  spec.size = 32;
  spec.ellipses = {{0.5, 0.5, 0.3, 0.3, 0.0, 0.5, Blend::kAdd}};
  ComplexImage img = generate_phantom(spec, 0);
  Ellipse far{5.0, 5.0, 0.05, 0.05, 0.0, 1.0, Blend::kReplace};
  CHECK(insert_anomaly(img, far).v == img.v);
}

TEST_CASE("anomaly equal to the underlying value changes nothing") {
  PhantomSpec spec;
  spec.size = 32;
  spec.ellipses = {{0.5, 0.5, 0.4, 0.4, 0.0, 0.3, Blend::kAdd}};
  ComplexImage img = generate_phantom(spec, 0);
  Ellipse same{0.5, 0.5, 0.1, 0.1, 0.0, 0.3, Blend::kReplace};
  CHECK(insert_anomaly(img, same).v == img.v);
}

TEST_CASE("anomaly changes exactly the rasterized interior pixels") {
  int n = 64;
  PhantomSpec spec;
  spec.size = n;
  spec.ellipses = {{0.5, 0.5, 0.49, 0.49, 0.0, 0.3, Blend::kAdd}};
  ComplexImage img = generate_phantom(spec, 0);

  // ~2% of the image area: pi*ax*ay ~= 0.02 with ax=ay=0.08
  Ellipse anomaly{0.5, 0.5, 0.08, 0.08, 0.0, 1.0, Blend::kReplace};
  ComplexImage out = insert_anomaly(img, anomaly);

  // Rasterization oracle: count interior pixels with the analytic rule.
  int interior = 0;
  for (int r = 0; r < n; ++r) {
    double v = (r + 0.5) / n;
    for (int c = 0; c < n; ++c) {
      double u = (c + 0.5) / n;
      double du = u - 0.5, dv = v - 0.5;
      if ((du / 0.08) * (du / 0.08) + (dv / 0.08) * (dv / 0.08) < 1.0) ++interior;
    }
  }
  int changed = 0;
  for (size_t i = 0; i < img.v.size(); ++i)
    if (img.v[i] != out.v[i]) ++changed;
  CHECK(changed == interior);
  CHECK(interior > 0);
}

TEST_CASE("phantom spec validation") {
  PhantomSpec bad_size;
  bad_size.size = 15;
  CHECK_THROWS_AS(generate_phantom(bad_size, 0), std::invalid_argument);

  PhantomSpec bad_intensity;
  bad_intensity.size = 16;
  bad_intensity.ellipses = {{0.5, 0.5, 0.2, 0.2, 0.0, 1.5, Blend::kAdd}};
  CHECK_THROWS_AS(generate_phantom(bad_intensity, 0), std::invalid_argument);
}
