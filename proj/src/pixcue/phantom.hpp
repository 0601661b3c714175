#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pixcue/types.hpp"

namespace pixcue {

enum class Blend { kAdd, kReplace };

// Geometry in fractions of the grid side: (cx, cy) center with cx along
// columns, (ax, ay) semi-axes, angle in radians (counter-clockwise).
struct Ellipse {
  double cx = 0.5;
  double cy = 0.5;
  double ax = 0.1;
  double ay = 0.1;
  double angle = 0.0;
  double intensity = 0.0;
  Blend blend = Blend::kAdd;
};

// Analytic stand-in for acquired anatomy: a stack of ellipses rasterized in
// order, an optional monotone contrast remap, an optional anomaly insert.
// `jitter` > 0 perturbs the listed geometry with the seed passed to
// generate_phantom, which is how dataset builders derive varied subjects
// from one base layout.
struct PhantomSpec {
  int size = 64;
  std::vector<Ellipse> ellipses;
  std::string contrast_profile = "identity";  // identity | t1 | t2 | flair
  std::optional<Ellipse> anomaly;
  double jitter = 0.0;
};

bool point_in_ellipse(const Ellipse& e, double u, double v);

// Monotone [0,1] -> [0,1] intensity remap for the named profile.
double apply_contrast(const std::string& profile, double x);

// Rasterized phantom, clamped to [0,1], zero imaginary part.
ComplexImage generate_phantom(const PhantomSpec& spec, uint64_t seed);

// Replace intensities of the real part inside the ellipse, clamped to [0,1].
ComplexImage insert_anomaly(const ComplexImage& img, const Ellipse& anomaly);
RealImage insert_anomaly(const RealImage& img, const Ellipse& anomaly);

RealImage magnitude(const ComplexImage& img);
ComplexImage to_complex(const RealImage& img);

}  // namespace pixcue
