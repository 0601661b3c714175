#include "pixcue/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "pixcue/rng.hpp"

namespace pixcue {

bool point_in_ellipse(const Ellipse& e, double u, double v) {
  double du = u - e.cx;
  double dv = v - e.cy;
  double ca = std::cos(e.angle);
  double sa = std::sin(e.angle);
  double x = ca * du + sa * dv;
  double y = -sa * du + ca * dv;
  if (e.ax <= 0.0 || e.ay <= 0.0) return false;
  double q = (x / e.ax) * (x / e.ax) + (y / e.ay) * (y / e.ay);
  return q < 1.0;
}

double apply_contrast(const std::string& profile, double x) {
  if (profile == "identity" || profile.empty()) return x;
  if (profile == "t1") return std::pow(x, 0.7);
  if (profile == "t2") return std::pow(x, 1.5);
  if (profile == "flair") {
    // S-curve through (0,0), (0.5,0.5), (1,1).
    const double s = 4.0;
    double t = std::tanh(s * (x - 0.5));
    double lo = std::tanh(-0.5 * s);
    double hi = std::tanh(0.5 * s);
    return (t - lo) / (hi - lo);
  }
  throw std::invalid_argument("phantom: unknown contrast profile '" + profile + "'");
}

namespace {

Ellipse jittered(const Ellipse& e, double jitter, Rng& rng) {
  Ellipse j = e;
  j.cx += 0.08 * jitter * (2.0 * rng.uniform() - 1.0);
  j.cy += 0.08 * jitter * (2.0 * rng.uniform() - 1.0);
  j.ax = std::max(0.004, j.ax * (1.0 + 0.25 * jitter * (2.0 * rng.uniform() - 1.0)));
  j.ay = std::max(0.004, j.ay * (1.0 + 0.25 * jitter * (2.0 * rng.uniform() - 1.0)));
  j.angle += 0.5 * jitter * (2.0 * rng.uniform() - 1.0);
  j.intensity *= 1.0 + 0.2 * jitter * (2.0 * rng.uniform() - 1.0);
  return j;
}

void rasterize(RealImage& img, const Ellipse& e) {
  int n = img.rows;
  for (int r = 0; r < n; ++r) {
    double v = (r + 0.5) / n;
    for (int c = 0; c < n; ++c) {
      double u = (c + 0.5) / n;
      if (point_in_ellipse(e, u, v)) {
        if (e.blend == Blend::kAdd)
          img.at(r, c) += e.intensity;
        else
          img.at(r, c) = e.intensity;
      }
    }
  }
}

}  // namespace

ComplexImage generate_phantom(const PhantomSpec& spec, uint64_t seed) {
  require(spec.size >= 16 && spec.size % 2 == 0,
          "phantom: size must be even and >= 16");
  require(spec.jitter >= 0.0, "phantom: jitter must be >= 0");
  for (const Ellipse& e : spec.ellipses)
    require(e.intensity >= -1.0 && e.intensity <= 1.0,
            "phantom: ellipse intensity must be in [-1,1]");

  Rng rng(seed);
  RealImage img(spec.size, spec.size, 0.0);
  for (const Ellipse& e : spec.ellipses) {
    Ellipse drawn = spec.jitter > 0.0 ? jittered(e, spec.jitter, rng) : e;
    drawn.intensity = std::clamp(drawn.intensity, -1.0, 1.0);
    rasterize(img, drawn);
  }
  for (double& x : img.v) x = apply_contrast(spec.contrast_profile, std::clamp(x, 0.0, 1.0));
  if (spec.anomaly) rasterize(img, *spec.anomaly);
  for (double& x : img.v) x = std::clamp(x, 0.0, 1.0);
  return to_complex(img);
}

RealImage insert_anomaly(const RealImage& img, const Ellipse& anomaly) {
  RealImage out = img;
  Ellipse e = anomaly;
  e.blend = Blend::kReplace;
  rasterize(out, e);
  for (double& x : out.v) x = std::clamp(x, 0.0, 1.0);
  return out;
}

ComplexImage insert_anomaly(const ComplexImage& img, const Ellipse& anomaly) {
  ComplexImage out = img;
  int n = img.rows;
  Ellipse e = anomaly;
  for (int r = 0; r < n; ++r) {
    double v = (r + 0.5) / n;
    for (int c = 0; c < n; ++c) {
      double u = (c + 0.5) / n;
      if (point_in_ellipse(e, u, v))
        out.at(r, c) = cdouble{std::clamp(e.intensity, 0.0, 1.0), out.at(r, c).imag()};
    }
  }
  return out;
}

RealImage magnitude(const ComplexImage& img) {
  RealImage out(img.rows, img.cols);
  for (size_t i = 0; i < img.v.size(); ++i) out.v[i] = std::abs(img.v[i]);
  return out;
}

ComplexImage to_complex(const RealImage& img) {
  ComplexImage out(img.rows, img.cols);
  for (size_t i = 0; i < img.v.size(); ++i) out.v[i] = cdouble{img.v[i], 0.0};
  return out;
}

}  // namespace pixcue
