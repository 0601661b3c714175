#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pixcue/mask.hpp"
#include "pixcue/quantize.hpp"
#include "pixcue/rng.hpp"
#include "pixcue/types.hpp"

namespace pixcue {

// Unrolled reconstruction: iterations-1 spectral update stages, each a data
// consistency step plus a two-layer image-domain conv block, then a final
// data consistency step feeding the per-pixel classification head.
struct NetArch {
  int iterations = 6;
  int hidden_channels = 16;
  int classes = 256;
};

// 3x3 convolution, zero padded. Weights are laid out [ky][kx][ci][co] with
// the output channel contiguous so the inner accumulation loops vectorize.
struct Conv2d {
  int in_ch = 0;
  int out_ch = 0;
  std::vector<double> w;
  std::vector<double> b;
};

struct ConvBlock {
  Conv2d conv1;  // 2 -> hidden
  Conv2d conv2;  // hidden -> 2
};

struct NetParams {
  NetArch arch;
  std::vector<double> alpha;      // per-stage data consistency step size
  std::vector<ConvBlock> blocks;  // iterations - 1 of them
  Conv2d head;                    // 2 feature channels -> classes
};

// Named view of every parameter tensor, in checkpoint serialization order.
struct TensorRef {
  std::string name;
  std::vector<double>* data;
  std::vector<int> shape;
};

std::vector<TensorRef> param_tensors(NetParams& p);
void validate_params(const NetParams& p);

// Zero-filled parameters with the shapes the architecture dictates.
NetParams make_params(const NetArch& arch);

// Fan-in-scaled uniform conv weights, zero biases, unit step sizes.
// Values are snapped to their 32-bit float representation so checkpoints
// round-trip bit-exactly.
NetParams init_params(const NetArch& arch, uint64_t seed);

NetParams zeros_like(const NetParams& p);
void snap_params_to_f32(NetParams& p);

struct ForwardMode {
  bool dropout = false;
  double dropout_fraction = 0.0;
  uint64_t seed = 0;

  static ForwardMode deterministic() { return {}; }
  static ForwardMode with_dropout(double fraction, uint64_t seed) {
    return {true, fraction, seed};
  }
};

// y - alpha * M (y - y_u): pulls sampled rows toward the measurement,
// leaves unsampled rows untouched.
KSpaceGrid data_consistency_step(const KSpaceGrid& y, const KSpaceGrid& y_u,
                                 const SamplingMask& m, double alpha);

// Full unrolled pass; emits one softmax distribution per pixel.
ProbabilityVolume net_forward(const KSpaceGrid& y_u, const SamplingMask& m,
                              const NetParams& params, const ForwardMode& mode);

// Mean pixel cross-entropy against one-hot labels, forward only.
double net_loss(const NetParams& params, const KSpaceGrid& y_u, const SamplingMask& m,
                const QuantizedImage& labels, const ForwardMode& mode);

// Same loss plus reverse-mode gradients of every parameter, accumulated into
// `grad` (same shape as `params`).
double net_loss_and_gradients(const NetParams& params, const KSpaceGrid& y_u,
                              const SamplingMask& m, const QuantizedImage& labels,
                              const ForwardMode& mode, NetParams& grad);

// Inverted-scaling dropout applied in place; survivors are scaled by
// 1/(1-fraction) so the expectation matches the undropped activation.
void apply_dropout_inplace(std::span<double> activations, double fraction, Rng& rng);

}  // namespace pixcue
