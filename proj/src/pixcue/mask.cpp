#include "pixcue/mask.hpp"

#include <algorithm>
#include <cmath>

#include "pixcue/rng.hpp"

namespace pixcue {

void validate_mask(const SamplingMask& m) {
  require(m.n_lines >= 1, "mask: n_lines must be positive");
  int prev = -1;
  for (int line : m.lines) {
    require(line >= 0 && line < m.n_lines, "mask: line index out of range");
    require(line > prev, "mask: lines must be sorted and unique");
    prev = line;
  }
}

std::vector<uint8_t> selected_rows(const SamplingMask& m) {
  std::vector<uint8_t> sel(static_cast<size_t>(m.n_lines), 0);
  for (int line : m.lines) sel[static_cast<size_t>(line)] = 1;
  return sel;
}

std::pair<int, int> center_line_block(int n, double center_fraction) {
  require(center_fraction >= 0.0 && center_fraction <= 1.0,
          "mask: center_fraction must be in [0,1]");
  int count = static_cast<int>(std::llround(n * center_fraction));
  count = std::min(count, n);
  if (count <= 0) return {n / 2, 0};
  int start = n / 2 - count / 2;
  return {start, count};
}

namespace {

struct MaskBase {
  std::vector<int> center;      // always sampled
  std::vector<int> non_center;  // candidates for the remaining budget
  int extra = 0;                // lines still to pick
};

MaskBase mask_base(int n, double accel, double center_fraction) {
  require(n >= 2, "mask: grid side must be >= 2");
  require(accel >= 1.0, "mask: acceleration factor must be >= 1");
  auto [start, count] = center_line_block(n, center_fraction);
  MaskBase base;
  for (int i = 0; i < count; ++i) base.center.push_back(start + i);
  for (int i = 0; i < n; ++i)
    if (i < start || i >= start + count) base.non_center.push_back(i);
  int budget = static_cast<int>(std::floor(n / accel));
  base.extra = std::max(0, budget - count);
  return base;
}

SamplingMask assemble(int n, std::vector<int> center, std::vector<int> extra) {
  SamplingMask m;
  m.n_lines = n;
  m.lines = std::move(center);
  m.lines.insert(m.lines.end(), extra.begin(), extra.end());
  std::sort(m.lines.begin(), m.lines.end());
  validate_mask(m);
  return m;
}

}  // namespace

SamplingMask make_mask_equidistant(int n, double accel, double center_fraction) {
  MaskBase base = mask_base(n, accel, center_fraction);
  std::vector<int> extra;
  size_t m = base.non_center.size();
  for (int j = 0; j < base.extra && m > 0; ++j) {
    size_t idx = static_cast<size_t>(j) * m / static_cast<size_t>(base.extra);
    extra.push_back(base.non_center[idx]);
  }
  return assemble(n, std::move(base.center), std::move(extra));
}

SamplingMask make_mask_random(int n, double accel, double center_fraction,
                              uint64_t seed) {
  MaskBase base = mask_base(n, accel, center_fraction);
  Rng rng(seed);
  std::vector<int> extra = rng.sample_without_replacement(
      base.non_center, static_cast<size_t>(base.extra));
  return assemble(n, std::move(base.center), std::move(extra));
}

KSpaceGrid undersample(const KSpaceGrid& k, const SamplingMask& m) {
  require(m.n_lines == k.rows, "undersample: mask/grid dimension mismatch");
  validate_mask(m);
  KSpaceGrid out(k.rows, k.cols);
  for (int line : m.lines) {
    size_t off = static_cast<size_t>(line) * k.cols;
    for (int c = 0; c < k.cols; ++c) out.v[off + c] = k.v[off + c];
  }
  return out;
}

}  // namespace pixcue
