#include "pixcue/net.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pixcue/fft.hpp"

namespace pixcue {
namespace {

constexpr double kMagEps2 = 1e-20;  // keeps magnitude/phase gradients finite at 0

size_t conv_wsize(int in_ch, int out_ch) {
  return static_cast<size_t>(9) * in_ch * out_ch;
}

Conv2d make_conv(int in_ch, int out_ch) {
  Conv2d c;
  c.in_ch = in_ch;
  c.out_ch = out_ch;
  c.w.assign(conv_wsize(in_ch, out_ch), 0.0);
  c.b.assign(static_cast<size_t>(out_ch), 0.0);
  return c;
}

// out[y][x][co] = b[co] + sum_{ky,kx,ci} in[y+ky-1][x+kx-1][ci] * w[ky][kx][ci][co]
void conv3x3_forward(int n, const Conv2d& conv, const double* in, double* out) {
  const int ci_n = conv.in_ch;
  const int co_n = conv.out_ch;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double* o = out + (static_cast<size_t>(y) * n + x) * co_n;
      for (int co = 0; co < co_n; ++co) o[co] = conv.b[co];
      for (int ky = 0; ky < 3; ++ky) {
        int iy = y + ky - 1;
        if (iy < 0 || iy >= n) continue;
        for (int kx = 0; kx < 3; ++kx) {
          int ix = x + kx - 1;
          if (ix < 0 || ix >= n) continue;
          const double* ip = in + (static_cast<size_t>(iy) * n + ix) * ci_n;
          const double* wp = conv.w.data() + static_cast<size_t>((ky * 3 + kx) * ci_n) * co_n;
          for (int ci = 0; ci < ci_n; ++ci) {
            double s = ip[ci];
            const double* wr = wp + static_cast<size_t>(ci) * co_n;
            for (int co = 0; co < co_n; ++co) o[co] += s * wr[co];
          }
        }
      }
    }
  }
}

// Accumulates into d_in (may be null), d_w and d_b.
void conv3x3_backward(int n, const Conv2d& conv, const double* in, const double* d_out,
                      double* d_in, double* d_w, double* d_b) {
  const int ci_n = conv.in_ch;
  const int co_n = conv.out_ch;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double* go = d_out + (static_cast<size_t>(y) * n + x) * co_n;
      for (int co = 0; co < co_n; ++co) d_b[co] += go[co];
      for (int ky = 0; ky < 3; ++ky) {
        int iy = y + ky - 1;
        if (iy < 0 || iy >= n) continue;
        for (int kx = 0; kx < 3; ++kx) {
          int ix = x + kx - 1;
          if (ix < 0 || ix >= n) continue;
          size_t ipix = (static_cast<size_t>(iy) * n + ix) * ci_n;
          const double* ip = in + ipix;
          size_t woff = static_cast<size_t>((ky * 3 + kx) * ci_n) * co_n;
          for (int ci = 0; ci < ci_n; ++ci) {
            const double* wr = conv.w.data() + woff + static_cast<size_t>(ci) * co_n;
            double* dwr = d_w + woff + static_cast<size_t>(ci) * co_n;
            double s = ip[ci];
            double acc = 0.0;
            for (int co = 0; co < co_n; ++co) {
              double g = go[co];
              acc += wr[co] * g;
              dwr[co] += s * g;
            }
            if (d_in) d_in[ipix + ci] += acc;
          }
        }
      }
    }
  }
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void silu_forward(const std::vector<double>& z, std::vector<double>& a) {
  a.resize(z.size());
  for (size_t i = 0; i < z.size(); ++i) a[i] = z[i] * sigmoid(z[i]);
}

// d_z += d_a * silu'(z); d_a is consumed in place.
void silu_backward(const std::vector<double>& z, std::vector<double>& d) {
  for (size_t i = 0; i < z.size(); ++i) {
    double s = sigmoid(z[i]);
    d[i] *= s * (1.0 + z[i] * (1.0 - s));
  }
}

void complex_to_channels(const std::vector<cdouble>& v, std::vector<double>& ch) {
  ch.resize(v.size() * 2);
  for (size_t i = 0; i < v.size(); ++i) {
    ch[2 * i] = v[i].real();
    ch[2 * i + 1] = v[i].imag();
  }
}

void channels_to_complex(const std::vector<double>& ch, std::vector<cdouble>& v) {
  v.resize(ch.size() / 2);
  for (size_t i = 0; i < v.size(); ++i) v[i] = cdouble{ch[2 * i], ch[2 * i + 1]};
}

void check_finite_grid(const KSpaceGrid& g, int stage) {
  if (!all_finite(g.v))
    throw std::runtime_error("net_forward: non-finite values at iteration " +
                             std::to_string(stage));
}

struct StageTrace {
  KSpaceGrid y_in;
  std::vector<double> in0;   // image-domain 2-channel input to conv1
  std::vector<double> z1;    // conv1 pre-activation
  std::vector<double> a1;    // post-activation (after dropout if active)
  std::vector<double> drop;  // per-element dropout factors, empty when off
};

struct Trace {
  std::vector<StageTrace> stages;
  KSpaceGrid y_last;            // input to the final data consistency step
  std::vector<cdouble> x_fin;   // final image estimate
  std::vector<double> feats;    // scaled magnitude + phase, 2 channels
  ProbabilityVolume probs;
};

// Head features: magnitude rescaled to [-1,1]-ish and phase in (-1,1].
void head_features(const std::vector<cdouble>& x, std::vector<double>& feats) {
  feats.resize(x.size() * 2);
  for (size_t i = 0; i < x.size(); ++i) {
    double re = x[i].real();
    double im = x[i].imag();
    double mag = std::sqrt(re * re + im * im + kMagEps2);
    feats[2 * i] = 2.0 * mag - 1.0;
    feats[2 * i + 1] = std::atan2(im, re) / std::numbers::pi;
  }
}

void head_features_backward(const std::vector<cdouble>& x, const std::vector<double>& d_feats,
                            std::vector<cdouble>& d_x) {
  d_x.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double re = x[i].real();
    double im = x[i].imag();
    double r2 = re * re + im * im + kMagEps2;
    double mag = std::sqrt(r2);
    double dmag = 2.0 * d_feats[2 * i];
    double dphase = d_feats[2 * i + 1] / std::numbers::pi;
    double dre = dmag * re / mag + dphase * (-im / r2);
    double dim = dmag * im / mag + dphase * (re / r2);
    d_x[i] = cdouble{dre, dim};
  }
}

ProbabilityVolume forward_impl(const KSpaceGrid& y_u, const SamplingMask& m,
                               const NetParams& params, const ForwardMode& mode,
                               Trace* trace) {
  validate_params(params);
  require(m.n_lines == y_u.rows, "net_forward: mask/grid dimension mismatch");
  require(y_u.rows == y_u.cols, "net_forward: grid must be square");
  require(all_finite(y_u.v), "net_forward: non-finite input");
  if (mode.dropout)
    require(mode.dropout_fraction >= 0.0 && mode.dropout_fraction < 1.0,
            "net_forward: dropout fraction must be in [0,1)");

  const int n = y_u.rows;
  const int k_iters = params.arch.iterations;
  KSpaceGrid y = y_u;

  if (trace) trace->stages.resize(static_cast<size_t>(k_iters - 1));

  std::vector<double> in0, z1, a1, g2;
  for (int k = 0; k + 1 < k_iters; ++k) {
    const ConvBlock& blk = params.blocks[static_cast<size_t>(k)];
    ComplexImage img = idft2_unitary(y);
    complex_to_channels(img.v, in0);

    z1.assign(static_cast<size_t>(n) * n * blk.conv1.out_ch, 0.0);
    conv3x3_forward(n, blk.conv1, in0.data(), z1.data());
    silu_forward(z1, a1);

    std::vector<double> drop;
    if (mode.dropout && mode.dropout_fraction > 0.0) {
      Rng rng(mode.seed, static_cast<uint64_t>(k));
      drop.resize(a1.size());
      double keep_scale = 1.0 / (1.0 - mode.dropout_fraction);
      for (size_t i = 0; i < a1.size(); ++i) {
        drop[i] = rng.uniform() < mode.dropout_fraction ? 0.0 : keep_scale;
        a1[i] *= drop[i];
      }
    }

    g2.assign(static_cast<size_t>(n) * n * 2, 0.0);
    conv3x3_forward(n, blk.conv2, a1.data(), g2.data());

    ComplexImage gimg(n, n);
    channels_to_complex(g2, gimg.v);
    KSpaceGrid fg = dft2_unitary(gimg);

    KSpaceGrid y_next = data_consistency_step(y, y_u, m, params.alpha[static_cast<size_t>(k)]);
    for (size_t i = 0; i < y_next.v.size(); ++i) y_next.v[i] += fg.v[i];
    check_finite_grid(y_next, k + 1);

    if (trace) {
      StageTrace& st = trace->stages[static_cast<size_t>(k)];
      st.y_in = y;
      st.in0 = in0;
      st.z1 = z1;
      st.a1 = a1;
      st.drop = std::move(drop);
    }
    y = std::move(y_next);
  }

  KSpaceGrid y_dc = data_consistency_step(y, y_u, m, params.alpha[static_cast<size_t>(k_iters - 1)]);
  ComplexImage x_fin = idft2_unitary(y_dc);

  std::vector<double> feats;
  head_features(x_fin.v, feats);

  std::vector<double> logits(static_cast<size_t>(n) * n * params.arch.classes, 0.0);
  conv3x3_forward(n, params.head, feats.data(), logits.data());
  if (!all_finite(logits))
    throw std::runtime_error("net_forward: non-finite values at classification head");

  ProbabilityVolume probs(n, n, params.arch.classes);
  const int d = params.arch.classes;
  for (size_t i = 0; i < probs.num_pixels(); ++i) {
    const double* l = logits.data() + i * d;
    double* p = probs.p.data() + i * d;
    double mx = l[0];
    for (int c = 1; c < d; ++c) mx = std::max(mx, l[c]);
    double sum = 0.0;
    for (int c = 0; c < d; ++c) {
      p[c] = std::exp(l[c] - mx);
      sum += p[c];
    }
    double inv = 1.0 / sum;
    for (int c = 0; c < d; ++c) p[c] *= inv;
  }

  if (trace) {
    trace->y_last = std::move(y);
    trace->x_fin = std::move(x_fin.v);
    trace->feats = std::move(feats);
    trace->probs = std::move(probs);
    return {};
  }
  return probs;
}

}  // namespace

std::vector<TensorRef> param_tensors(NetParams& p) {
  std::vector<TensorRef> refs;
  refs.push_back({"alpha", &p.alpha, {static_cast<int>(p.alpha.size())}});
  for (size_t k = 0; k < p.blocks.size(); ++k) {
    ConvBlock& b = p.blocks[k];
    std::string prefix = "block" + std::to_string(k);
    refs.push_back({prefix + ".conv1.weight", &b.conv1.w, {3, 3, b.conv1.in_ch, b.conv1.out_ch}});
    refs.push_back({prefix + ".conv1.bias", &b.conv1.b, {b.conv1.out_ch}});
    refs.push_back({prefix + ".conv2.weight", &b.conv2.w, {3, 3, b.conv2.in_ch, b.conv2.out_ch}});
    refs.push_back({prefix + ".conv2.bias", &b.conv2.b, {b.conv2.out_ch}});
  }
  refs.push_back({"head.weight", &p.head.w, {3, 3, p.head.in_ch, p.head.out_ch}});
  refs.push_back({"head.bias", &p.head.b, {p.head.out_ch}});
  return refs;
}

void validate_params(const NetParams& p) {
  require(p.arch.iterations >= 1, "params: iteration count must be >= 1");
  require(p.arch.classes >= 2, "params: class count must be >= 2");
  require(p.alpha.size() == static_cast<size_t>(p.arch.iterations),
          "params: alpha count mismatch");
  require(p.blocks.size() == static_cast<size_t>(p.arch.iterations - 1),
          "params: conv block count mismatch");
  for (const ConvBlock& b : p.blocks) {
    require(b.conv1.in_ch == 2 && b.conv1.out_ch == p.arch.hidden_channels &&
                b.conv2.in_ch == p.arch.hidden_channels && b.conv2.out_ch == 2,
            "params: conv block channel mismatch");
    require(b.conv1.w.size() == conv_wsize(b.conv1.in_ch, b.conv1.out_ch) &&
                b.conv2.w.size() == conv_wsize(b.conv2.in_ch, b.conv2.out_ch),
            "params: conv weight size mismatch");
  }
  require(p.head.in_ch == 2 && p.head.out_ch == p.arch.classes &&
              p.head.w.size() == conv_wsize(2, p.arch.classes),
          "params: head shape mismatch");
  require(all_finite(p.alpha) && all_finite(p.head.w) && all_finite(p.head.b),
          "params: non-finite values");
  for (const ConvBlock& b : p.blocks)
    require(all_finite(b.conv1.w) && all_finite(b.conv1.b) && all_finite(b.conv2.w) &&
                all_finite(b.conv2.b),
            "params: non-finite values");
}

NetParams make_params(const NetArch& arch) {
  require(arch.iterations >= 1, "make_params: iteration count must be >= 1");
  require(arch.hidden_channels >= 1, "make_params: hidden channels must be >= 1");
  require(arch.classes >= 2, "make_params: class count must be >= 2");
  NetParams p;
  p.arch = arch;
  p.alpha.assign(static_cast<size_t>(arch.iterations), 0.0);
  for (int k = 0; k + 1 < arch.iterations; ++k) {
    ConvBlock b;
    b.conv1 = make_conv(2, arch.hidden_channels);
    b.conv2 = make_conv(arch.hidden_channels, 2);
    p.blocks.push_back(std::move(b));
  }
  p.head = make_conv(2, arch.classes);
  return p;
}

NetParams init_params(const NetArch& arch, uint64_t seed) {
  NetParams p = make_params(arch);
  std::fill(p.alpha.begin(), p.alpha.end(), 1.0);
  Rng rng(seed);
  auto fill = [&rng](Conv2d& c) {
    double bound = std::sqrt(1.0 / (9.0 * c.in_ch));
    for (double& w : c.w) w = bound * (2.0 * rng.uniform() - 1.0);
  };
  for (ConvBlock& b : p.blocks) {
    fill(b.conv1);
    fill(b.conv2);
  }
  fill(p.head);
  snap_params_to_f32(p);
  return p;
}

NetParams zeros_like(const NetParams& p) {
  NetParams z;
  z.arch = p.arch;
  z.alpha.assign(p.alpha.size(), 0.0);
  for (const ConvBlock& b : p.blocks) {
    ConvBlock zb;
    zb.conv1 = make_conv(b.conv1.in_ch, b.conv1.out_ch);
    zb.conv2 = make_conv(b.conv2.in_ch, b.conv2.out_ch);
    z.blocks.push_back(std::move(zb));
  }
  z.head = make_conv(p.head.in_ch, p.head.out_ch);
  return z;
}

void snap_params_to_f32(NetParams& p) {
  for (TensorRef& t : param_tensors(p))
    for (double& x : *t.data) x = static_cast<double>(static_cast<float>(x));
}

KSpaceGrid data_consistency_step(const KSpaceGrid& y, const KSpaceGrid& y_u,
                                 const SamplingMask& m, double alpha) {
  require(y.rows == y_u.rows && y.cols == y_u.cols, "data_consistency: shape mismatch");
  require(m.n_lines == y.rows, "data_consistency: mask dimension mismatch");
  KSpaceGrid out = y;
  for (int line : m.lines) {
    size_t off = static_cast<size_t>(line) * y.cols;
    if (alpha == 1.0) {
      // full replacement, bit-exact
      for (int c = 0; c < y.cols; ++c) out.v[off + c] = y_u.v[off + c];
    } else {
      for (int c = 0; c < y.cols; ++c)
        out.v[off + c] -= alpha * (y.v[off + c] - y_u.v[off + c]);
    }
  }
  return out;
}

ProbabilityVolume net_forward(const KSpaceGrid& y_u, const SamplingMask& m,
                              const NetParams& params, const ForwardMode& mode) {
  return forward_impl(y_u, m, params, mode, nullptr);
}

void apply_dropout_inplace(std::span<double> activations, double fraction, Rng& rng) {
  require(fraction >= 0.0 && fraction < 1.0, "dropout: fraction must be in [0,1)");
  if (fraction == 0.0) return;
  double keep_scale = 1.0 / (1.0 - fraction);
  for (double& a : activations) a *= rng.uniform() < fraction ? 0.0 : keep_scale;
}

double net_loss(const NetParams& params, const KSpaceGrid& y_u, const SamplingMask& m,
                const QuantizedImage& labels, const ForwardMode& mode) {
  require(labels.rows == y_u.rows && labels.cols == y_u.cols,
          "loss: label/grid shape mismatch");
  require(labels.num_classes() == params.arch.classes, "loss: class count mismatch");
  ProbabilityVolume probs = net_forward(y_u, m, params, mode);
  double loss = 0.0;
  for (size_t i = 0; i < probs.num_pixels(); ++i)
    loss -= std::log(std::max(probs.p[i * probs.d + labels.labels[i]], kProbFloor));
  loss /= static_cast<double>(probs.num_pixels());
  if (!std::isfinite(loss)) throw std::runtime_error("loss: non-finite loss value");
  return loss;
}

double net_loss_and_gradients(const NetParams& params, const KSpaceGrid& y_u,
                              const SamplingMask& m, const QuantizedImage& labels,
                              const ForwardMode& mode, NetParams& grad) {
  require(labels.rows == y_u.rows && labels.cols == y_u.cols,
          "loss: label/grid shape mismatch");
  require(labels.num_classes() == params.arch.classes, "loss: class count mismatch");

  Trace trace;
  forward_impl(y_u, m, params, mode, &trace);

  const int n = y_u.rows;
  const int d = params.arch.classes;
  const size_t npix = static_cast<size_t>(n) * n;
  const auto sel = selected_rows(m);

  // Loss and softmax/cross-entropy gradient in one pass.
  double loss = 0.0;
  std::vector<double> d_logits(npix * d);
  const double inv_npix = 1.0 / static_cast<double>(npix);
  for (size_t i = 0; i < npix; ++i) {
    const double* p = trace.probs.p.data() + i * d;
    double* g = d_logits.data() + i * d;
    uint16_t lab = labels.labels[i];
    loss -= std::log(std::max(p[lab], kProbFloor));
    for (int c = 0; c < d; ++c) g[c] = p[c] * inv_npix;
    g[lab] -= inv_npix;
  }
  loss *= inv_npix;
  if (!std::isfinite(loss)) throw std::runtime_error("loss: non-finite loss value");

  // Head backward.
  std::vector<double> d_feats(npix * 2, 0.0);
  conv3x3_backward(n, params.head, trace.feats.data(), d_logits.data(), d_feats.data(),
                   grad.head.w.data(), grad.head.b.data());

  std::vector<cdouble> d_xfin;
  head_features_backward(trace.x_fin, d_feats, d_xfin);

  // Adjoint of idft2 is dft2.
  ComplexImage d_xfin_img;
  d_xfin_img.rows = n;
  d_xfin_img.cols = n;
  d_xfin_img.v = std::move(d_xfin);
  KSpaceGrid d_y = dft2_unitary(d_xfin_img);

  // Backward through the final data consistency step.
  const int k_last = params.arch.iterations - 1;
  {
    double a = params.alpha[static_cast<size_t>(k_last)];
    double d_alpha = 0.0;
    for (int line = 0; line < n; ++line) {
      if (!sel[static_cast<size_t>(line)]) continue;
      size_t off = static_cast<size_t>(line) * n;
      for (int c = 0; c < n; ++c) {
        cdouble resid = trace.y_last.v[off + c] - y_u.v[off + c];
        cdouble g = d_y.v[off + c];
        d_alpha -= g.real() * resid.real() + g.imag() * resid.imag();
        d_y.v[off + c] = g * (1.0 - a);
      }
    }
    grad.alpha[static_cast<size_t>(k_last)] += d_alpha;
  }

  // Walk the spectral update stages in reverse.
  std::vector<double> d_g2(npix * 2), d_a1, d_in0(npix * 2);
  for (int k = params.arch.iterations - 2; k >= 0; --k) {
    const StageTrace& st = trace.stages[static_cast<size_t>(k)];
    const ConvBlock& blk = params.blocks[static_cast<size_t>(k)];
    ConvBlock& gblk = grad.blocks[static_cast<size_t>(k)];

    // Additive branch: y_next += dft2(conv path); adjoint of dft2 is idft2.
    ComplexImage d_fg = idft2_unitary(d_y);
    complex_to_channels(d_fg.v, d_g2);

    d_a1.assign(st.a1.size(), 0.0);
    conv3x3_backward(n, blk.conv2, st.a1.data(), d_g2.data(), d_a1.data(),
                     gblk.conv2.w.data(), gblk.conv2.b.data());

    if (!st.drop.empty())
      for (size_t i = 0; i < d_a1.size(); ++i) d_a1[i] *= st.drop[i];
    silu_backward(st.z1, d_a1);

    std::fill(d_in0.begin(), d_in0.end(), 0.0);
    conv3x3_backward(n, blk.conv1, st.in0.data(), d_a1.data(), d_in0.data(),
                     gblk.conv1.w.data(), gblk.conv1.b.data());

    // Conv path reached in0 = channels(idft2(y_k)); adjoint of idft2 is dft2.
    ComplexImage d_in0_img(n, n);
    channels_to_complex(d_in0, d_in0_img.v);
    KSpaceGrid d_y_conv = dft2_unitary(d_in0_img);

    // Data consistency branch.
    double a = params.alpha[static_cast<size_t>(k)];
    double d_alpha = 0.0;
    for (int line = 0; line < n; ++line) {
      size_t off = static_cast<size_t>(line) * n;
      bool sampled = sel[static_cast<size_t>(line)] != 0;
      for (int c = 0; c < n; ++c) {
        cdouble g = d_y.v[off + c];
        if (sampled) {
          cdouble resid = st.y_in.v[off + c] - y_u.v[off + c];
          d_alpha -= g.real() * resid.real() + g.imag() * resid.imag();
          g *= 1.0 - a;
        }
        d_y.v[off + c] = g + d_y_conv.v[off + c];
      }
    }
    grad.alpha[static_cast<size_t>(k)] += d_alpha;
  }

  return loss;
}

}  // namespace pixcue
