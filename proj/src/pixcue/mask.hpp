#pragma once

#include <cstdint>
#include <vector>

#include "pixcue/types.hpp"

namespace pixcue {

// Set of sampled phase-encode lines (row indices) of an N-line grid.
// `lines` is sorted and duplicate-free.
struct SamplingMask {
  int n_lines = 0;
  std::vector<int> lines;

  bool full() const { return static_cast<int>(lines.size()) == n_lines; }
};

void validate_mask(const SamplingMask& m);

// Per-row selected flags, index == row.
std::vector<uint8_t> selected_rows(const SamplingMask& m);

// The round(N*f) lines symmetric about N/2, biased low when the count is even.
// Returns {start, count}.
std::pair<int, int> center_line_block(int n, double center_fraction);

// Deterministic mask: center block plus equidistant strides over the
// remaining lines until floor(N/accel) lines are sampled. If the center block
// alone exceeds the budget, only the center block is sampled.
SamplingMask make_mask_equidistant(int n, double accel, double center_fraction);

// Center block plus uniformly drawn (without replacement) extra lines.
SamplingMask make_mask_random(int n, double accel, double center_fraction,
                              uint64_t seed);

// Keep sampled rows, zero the rest.
KSpaceGrid undersample(const KSpaceGrid& k, const SamplingMask& m);

}  // namespace pixcue
