#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pixcue {

using cdouble = std::complex<double>;

// Real-valued 2D field, row-major. Used for phantoms, reconstructions,
// uncertainty maps and error maps alike.
struct RealImage {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  RealImage() = default;
  RealImage(int r, int c, double fill = 0.0)
      : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return v.size(); }
};

// Complex-valued image-domain field (symbol x in the acquisition model).
struct ComplexImage {
  int rows = 0;
  int cols = 0;
  std::vector<cdouble> v;

  ComplexImage() = default;
  ComplexImage(int r, int c)
      : rows(r), cols(c), v(static_cast<size_t>(r) * c, cdouble{0.0, 0.0}) {}

  cdouble& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  cdouble at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return v.size(); }
};

// Frequency-domain field. Same layout as ComplexImage but kept as a distinct
// type: row index means phase-encode line, and the DC bin sits at row/col N/2.
struct KSpaceGrid {
  int rows = 0;
  int cols = 0;
  std::vector<cdouble> v;

  KSpaceGrid() = default;
  KSpaceGrid(int r, int c)
      : rows(r), cols(c), v(static_cast<size_t>(r) * c, cdouble{0.0, 0.0}) {}

  cdouble& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  cdouble at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return v.size(); }
};

using UncertaintyMap = RealImage;

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline bool all_finite(const std::vector<cdouble>& v) {
  for (const cdouble& z : v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// File/format level failures (bad magic, truncation, unparseable config).
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pixcue
