#include "pixcue/fft.hpp"

#include <numbers>

namespace pixcue {
namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 transform, no normalization.
void fft_pow2(cdouble* a, int n, bool inverse) {
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * std::numbers::pi / len * (inverse ? 1.0 : -1.0);
    cdouble wlen(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      cdouble w(1.0, 0.0);
      for (int j = 0; j < len / 2; ++j) {
        cdouble u = a[i + j];
        cdouble t = a[i + j + len / 2] * w;
        a[i + j] = u + t;
        a[i + j + len / 2] = u - t;
        w *= wlen;
      }
    }
  }
}

// O(n^2) fallback for even sizes that are not a power of two.
void dft_direct(cdouble* a, int n, bool inverse) {
  std::vector<cdouble> omega(static_cast<size_t>(n));
  double sign = inverse ? 1.0 : -1.0;
  for (int m = 0; m < n; ++m) {
    double ang = sign * 2.0 * std::numbers::pi * m / n;
    omega[m] = cdouble(std::cos(ang), std::sin(ang));
  }
  std::vector<cdouble> out(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    cdouble acc(0.0, 0.0);
    for (int j = 0; j < n; ++j)
      acc += a[j] * omega[static_cast<size_t>(k) * j % n];
    out[k] = acc;
  }
  for (int k = 0; k < n; ++k) a[k] = out[k];
}

void fft1d(cdouble* a, int n, bool inverse) {
  if (is_pow2(n))
    fft_pow2(a, n, inverse);
  else
    dft_direct(a, n, inverse);
}

// Row-column 2D transform, then scale by 1/N (unitary over the N*N grid).
void fft2_unitary_inplace(std::vector<cdouble>& v, int n, bool inverse) {
  for (int r = 0; r < n; ++r) fft1d(v.data() + static_cast<size_t>(r) * n, n, inverse);
  std::vector<cdouble> col(static_cast<size_t>(n));
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) col[r] = v[static_cast<size_t>(r) * n + c];
    fft1d(col.data(), n, inverse);
    for (int r = 0; r < n; ++r) v[static_cast<size_t>(r) * n + c] = col[r];
  }
  double scale = 1.0 / n;
  for (cdouble& z : v) z *= scale;
}

// Swap halves along both axes. Self-inverse for even N, so the same permutation
// centers a spectrum and un-centers it.
void shift_halves(std::vector<cdouble>& v, int n) {
  int h = n / 2;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < n; ++c) {
      int r2 = r + h;
      int c2 = (c + h) % n;
      std::swap(v[static_cast<size_t>(r) * n + c], v[static_cast<size_t>(r2) * n + c2]);
    }
  }
}

void check_square_even_finite(int rows, int cols, const std::vector<cdouble>& v,
                              const char* what) {
  require(rows == cols, std::string(what) + ": grid must be square");
  require(rows >= 2 && rows % 2 == 0, std::string(what) + ": grid side must be even");
  require(all_finite(v), std::string(what) + ": non-finite input values");
}

}  // namespace

KSpaceGrid dft2_unitary(const ComplexImage& img) {
  check_square_even_finite(img.rows, img.cols, img.v, "dft2_unitary");
  KSpaceGrid out;
  out.rows = img.rows;
  out.cols = img.cols;
  out.v = img.v;
  fft2_unitary_inplace(out.v, out.rows, /*inverse=*/false);
  shift_halves(out.v, out.rows);
  return out;
}

ComplexImage idft2_unitary(const KSpaceGrid& k) {
  check_square_even_finite(k.rows, k.cols, k.v, "idft2_unitary");
  ComplexImage out;
  out.rows = k.rows;
  out.cols = k.cols;
  out.v = k.v;
  shift_halves(out.v, out.rows);
  fft2_unitary_inplace(out.v, out.rows, /*inverse=*/true);
  return out;
}

}  // namespace pixcue
