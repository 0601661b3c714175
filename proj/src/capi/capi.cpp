#include "pixcue/pixcue.h"

#include <cstring>
#include <string>
#include <variant>

#include "json.hpp"
#include "pixcue/fft.hpp"
#include "pixcue/forward_model.hpp"
#include "pixcue/harness.hpp"
#include "pixcue/io.hpp"
#include "pixcue/metrics.hpp"
#include "pixcue/net.hpp"
#include "pixcue/phantom.hpp"
#include "pixcue/quantize.hpp"
#include "pixcue/uncertainty.hpp"
#include "pixcue/version.hpp"

using namespace pixcue;
using nlohmann::json;

struct pixcue_image {
  std::variant<RealImage, ComplexImage> v;

  bool is_complex() const { return std::holds_alternative<ComplexImage>(v); }
  int rows() const {
    return is_complex() ? std::get<ComplexImage>(v).rows : std::get<RealImage>(v).rows;
  }
  int cols() const {
    return is_complex() ? std::get<ComplexImage>(v).cols : std::get<RealImage>(v).cols;
  }
};

struct pixcue_mask {
  SamplingMask m;
};

struct pixcue_volume {
  ProbabilityVolume p;
};

struct pixcue_checkpoint {
  Checkpoint c;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return PIXCUE_OK;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return PIXCUE_ERR_INVALID_ARGUMENT;
  } catch (const FormatError& e) {
    g_last_error = e.what();
    return PIXCUE_ERR_FORMAT;
  } catch (const IoError& e) {
    g_last_error = e.what();
    return PIXCUE_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PIXCUE_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return PIXCUE_ERR_RUNTIME;
  }
}

void check_ptr(const void* p, const char* what) {
  if (!p) throw std::invalid_argument(std::string(what) + " must not be null");
}

ComplexImage as_complex(const pixcue_image* img) {
  if (img->is_complex()) return std::get<ComplexImage>(img->v);
  return to_complex(std::get<RealImage>(img->v));
}

const RealImage& as_real(const pixcue_image* img, const char* what) {
  if (img->is_complex())
    throw std::invalid_argument(std::string(what) + " must be a real-valued image");
  return std::get<RealImage>(img->v);
}

KSpaceGrid as_kspace(const pixcue_image* img) {
  ComplexImage c = as_complex(img);
  KSpaceGrid k;
  k.rows = c.rows;
  k.cols = c.cols;
  k.v = std::move(c.v);
  return k;
}

pixcue_image* wrap(RealImage img) { return new pixcue_image{std::move(img)}; }
pixcue_image* wrap(ComplexImage img) { return new pixcue_image{std::move(img)}; }
pixcue_image* wrap(KSpaceGrid k) {
  ComplexImage c;
  c.rows = k.rows;
  c.cols = k.cols;
  c.v = std::move(k.v);
  return new pixcue_image{std::move(c)};
}

json parse_json_arg(const char* text, const char* what) {
  check_ptr(text, what);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw std::invalid_argument(std::string(what) + " is not valid JSON");
  return j;
}

std::string opt_str(const char* s) { return s ? std::string(s) : std::string(); }

int command_result_to_status(const CommandResult& res) {
  return res.exit_code == 0 ? PIXCUE_OK : PIXCUE_ERR_CHECK_FAILED;
}

}  // namespace

extern "C" {

const char* pixcue_version(void) { return kToolVersion; }

const char* pixcue_strerror(int status) {
  switch (status) {
    case PIXCUE_OK: return "ok";
    case PIXCUE_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PIXCUE_ERR_FORMAT: return "file format error";
    case PIXCUE_ERR_IO: return "i/o error";
    case PIXCUE_ERR_RUNTIME: return "runtime error";
    case PIXCUE_ERR_CHECK_FAILED: return "acceptance check failed";
    default: return "unknown status";
  }
}

const char* pixcue_last_error(void) { return g_last_error.c_str(); }

/* ---- images ---- */

int pixcue_image_create_real(int rows, int cols, const double* data, pixcue_image** out) {
  return guarded([&] {
    check_ptr(out, "out");
    require(rows > 0 && cols > 0, "image dimensions must be positive");
    RealImage img(rows, cols);
    if (data) std::memcpy(img.v.data(), data, img.size() * sizeof(double));
    *out = wrap(std::move(img));
  });
}

int pixcue_image_create_complex(int rows, int cols, const double* interleaved,
                                pixcue_image** out) {
  return guarded([&] {
    check_ptr(out, "out");
    require(rows > 0 && cols > 0, "image dimensions must be positive");
    ComplexImage img(rows, cols);
    if (interleaved)
      for (size_t i = 0; i < img.size(); ++i)
        img.v[i] = cdouble{interleaved[2 * i], interleaved[2 * i + 1]};
    *out = wrap(std::move(img));
  });
}

void pixcue_image_free(pixcue_image* img) { delete img; }

int pixcue_image_rows(const pixcue_image* img, int* out) {
  return guarded([&] {
    check_ptr(img, "image");
    check_ptr(out, "out");
    *out = img->rows();
  });
}

int pixcue_image_cols(const pixcue_image* img, int* out) {
  return guarded([&] {
    check_ptr(img, "image");
    check_ptr(out, "out");
    *out = img->cols();
  });
}

int pixcue_image_is_complex(const pixcue_image* img, int* out) {
  return guarded([&] {
    check_ptr(img, "image");
    check_ptr(out, "out");
    *out = img->is_complex() ? 1 : 0;
  });
}

int pixcue_image_copy_data(const pixcue_image* img, double* out, size_t capacity) {
  return guarded([&] {
    check_ptr(img, "image");
    check_ptr(out, "out");
    if (img->is_complex()) {
      const ComplexImage& c = std::get<ComplexImage>(img->v);
      require(capacity >= 2 * c.size(), "buffer too small");
      for (size_t i = 0; i < c.size(); ++i) {
        out[2 * i] = c.v[i].real();
        out[2 * i + 1] = c.v[i].imag();
      }
    } else {
      const RealImage& r = std::get<RealImage>(img->v);
      require(capacity >= r.size(), "buffer too small");
      std::memcpy(out, r.v.data(), r.size() * sizeof(double));
    }
  });
}

int pixcue_image_load(const char* path, pixcue_image** out) {
  return guarded([&] {
    check_ptr(path, "path");
    check_ptr(out, "out");
    LoadedImage img = load_image(path);
    if (auto* real = std::get_if<RealImage>(&img))
      *out = wrap(std::move(*real));
    else
      *out = wrap(std::move(std::get<ComplexImage>(img)));
  });
}

int pixcue_image_save(const pixcue_image* img, const char* path) {
  return guarded([&] {
    check_ptr(img, "image");
    check_ptr(path, "path");
    if (img->is_complex())
      save_image(std::get<ComplexImage>(img->v), path);
    else
      save_image(std::get<RealImage>(img->v), path);
  });
}

int pixcue_magnitude(const pixcue_image* img, pixcue_image** out) {
  return guarded([&] {
    check_ptr(img, "image");
    check_ptr(out, "out");
    *out = wrap(magnitude(as_complex(img)));
  });
}

/* ---- synthetic acquisition ---- */

int pixcue_dft2(const pixcue_image* img, pixcue_image** out_kspace) {
  return guarded([&] {
    check_ptr(img, "image");
    check_ptr(out_kspace, "out");
    *out_kspace = wrap(dft2_unitary(as_complex(img)));
  });
}

int pixcue_idft2(const pixcue_image* kspace, pixcue_image** out_img) {
  return guarded([&] {
    check_ptr(kspace, "kspace");
    check_ptr(out_img, "out");
    *out_img = wrap(idft2_unitary(as_kspace(kspace)));
  });
}

int pixcue_zero_filled(const pixcue_image* kspace, pixcue_image** out_img) {
  return guarded([&] {
    check_ptr(kspace, "kspace");
    check_ptr(out_img, "out");
    *out_img = wrap(zero_filled(as_kspace(kspace)));
  });
}

int pixcue_undersample(const pixcue_image* kspace, const pixcue_mask* mask,
                       pixcue_image** out) {
  return guarded([&] {
    check_ptr(kspace, "kspace");
    check_ptr(mask, "mask");
    check_ptr(out, "out");
    *out = wrap(undersample(as_kspace(kspace), mask->m));
  });
}

int pixcue_add_complex_noise(const pixcue_image* kspace, double sigma, uint64_t seed,
                             pixcue_image** out) {
  return guarded([&] {
    check_ptr(kspace, "kspace");
    check_ptr(out, "out");
    *out = wrap(add_complex_noise(as_kspace(kspace), {sigma, seed}));
  });
}

int pixcue_generate_phantom(const char* spec_json, uint64_t seed, pixcue_image** out) {
  return guarded([&] {
    check_ptr(out, "out");
    PhantomSpec spec = phantom_spec_from_json(parse_json_arg(spec_json, "phantom spec"));
    *out = wrap(generate_phantom(spec, seed));
  });
}

int pixcue_insert_anomaly(const pixcue_image* img, const char* ellipse_json,
                          pixcue_image** out) {
  return guarded([&] {
    check_ptr(img, "image");
    check_ptr(out, "out");
    Ellipse e = ellipse_from_json(parse_json_arg(ellipse_json, "ellipse"));
    if (img->is_complex())
      *out = wrap(insert_anomaly(std::get<ComplexImage>(img->v), e));
    else
      *out = wrap(insert_anomaly(std::get<RealImage>(img->v), e));
  });
}

/* ---- masks ---- */

int pixcue_mask_equidistant(int n, double accel, double center_fraction,
                            pixcue_mask** out) {
  return guarded([&] {
    check_ptr(out, "out");
    *out = new pixcue_mask{make_mask_equidistant(n, accel, center_fraction)};
  });
}

int pixcue_mask_random(int n, double accel, double center_fraction, uint64_t seed,
                       pixcue_mask** out) {
  return guarded([&] {
    check_ptr(out, "out");
    *out = new pixcue_mask{make_mask_random(n, accel, center_fraction, seed)};
  });
}

void pixcue_mask_free(pixcue_mask* mask) { delete mask; }

int pixcue_mask_size(const pixcue_mask* mask, int* out_n) {
  return guarded([&] {
    check_ptr(mask, "mask");
    check_ptr(out_n, "out");
    *out_n = mask->m.n_lines;
  });
}

int pixcue_mask_lines(const pixcue_mask* mask, int* out_lines, size_t capacity,
                      size_t* out_count) {
  return guarded([&] {
    check_ptr(mask, "mask");
    check_ptr(out_count, "out_count");
    *out_count = mask->m.lines.size();
    if (out_lines) {
      require(capacity >= mask->m.lines.size(), "buffer too small");
      std::memcpy(out_lines, mask->m.lines.data(), mask->m.lines.size() * sizeof(int));
    }
  });
}

int pixcue_mask_load(const char* path, pixcue_mask** out) {
  return guarded([&] {
    check_ptr(path, "path");
    check_ptr(out, "out");
    *out = new pixcue_mask{load_mask(path)};
  });
}

int pixcue_mask_save(const pixcue_mask* mask, const char* path) {
  return guarded([&] {
    check_ptr(mask, "mask");
    check_ptr(path, "path");
    save_mask(mask->m, path);
  });
}

/* ---- quantization ---- */

int pixcue_quantize_one_hot(const pixcue_image* img, int n_bits, pixcue_volume** out) {
  return guarded([&] {
    check_ptr(img, "image");
    check_ptr(out, "out");
    *out = new pixcue_volume{one_hot_target(quantize(as_real(img, "image"), n_bits))};
  });
}

int pixcue_expectation_image(const pixcue_volume* vol, pixcue_image** out) {
  return guarded([&] {
    check_ptr(vol, "volume");
    check_ptr(out, "out");
    *out = wrap(expectation_image(vol->p));
  });
}

int pixcue_cross_entropy_mean(const pixcue_volume* predicted, const pixcue_volume* target,
                              double* out) {
  return guarded([&] {
    check_ptr(predicted, "predicted");
    check_ptr(target, "target");
    check_ptr(out, "out");
    *out = cross_entropy(predicted->p, target->p).second;
  });
}

void pixcue_volume_free(pixcue_volume* vol) { delete vol; }

int pixcue_volume_dims(const pixcue_volume* vol, int* rows, int* cols, int* classes) {
  return guarded([&] {
    check_ptr(vol, "volume");
    if (rows) *rows = vol->p.rows;
    if (cols) *cols = vol->p.cols;
    if (classes) *classes = vol->p.d;
  });
}

int pixcue_volume_load(const char* path, pixcue_volume** out) {
  return guarded([&] {
    check_ptr(path, "path");
    check_ptr(out, "out");
    *out = new pixcue_volume{load_volume(path)};
  });
}

int pixcue_volume_save(const pixcue_volume* vol, const char* path) {
  return guarded([&] {
    check_ptr(vol, "volume");
    check_ptr(path, "path");
    save_volume(vol->p, path);
  });
}

/* ---- reconstruction ---- */

int pixcue_checkpoint_load(const char* path, pixcue_checkpoint** out) {
  return guarded([&] {
    check_ptr(path, "path");
    check_ptr(out, "out");
    *out = new pixcue_checkpoint{load_checkpoint(path)};
  });
}

void pixcue_checkpoint_free(pixcue_checkpoint* ckpt) { delete ckpt; }

int pixcue_reconstruct(const pixcue_checkpoint* ckpt, const pixcue_image* kspace,
                       const pixcue_mask* mask, pixcue_image** out_recon,
                       pixcue_volume** out_probs) {
  return guarded([&] {
    check_ptr(ckpt, "checkpoint");
    check_ptr(kspace, "kspace");
    check_ptr(mask, "mask");
    check_ptr(out_recon, "out_recon");
    ProbabilityVolume probs = net_forward(as_kspace(kspace), mask->m, ckpt->c.params,
                                          ForwardMode::deterministic());
    *out_recon = wrap(expectation_image(probs));
    if (out_probs) *out_probs = new pixcue_volume{std::move(probs)};
  });
}

/* ---- uncertainty ---- */

int pixcue_exact_variance_map(const pixcue_volume* vol, pixcue_image** out) {
  return guarded([&] {
    check_ptr(vol, "volume");
    check_ptr(out, "out");
    *out = wrap(exact_variance_map(vol->p));
  });
}

int pixcue_fast_variance_map(const pixcue_volume* vol, pixcue_image** out) {
  return guarded([&] {
    check_ptr(vol, "volume");
    check_ptr(out, "out");
    *out = wrap(fast_variance_map(vol->p));
  });
}

int pixcue_mc_dropout_variance(const pixcue_checkpoint* ckpt, const pixcue_image* kspace,
                               const pixcue_mask* mask, int passes, double dropout_fraction,
                               uint64_t seed, pixcue_image** out) {
  return guarded([&] {
    check_ptr(ckpt, "checkpoint");
    check_ptr(kspace, "kspace");
    check_ptr(mask, "mask");
    check_ptr(out, "out");
    McConfig cfg{passes, dropout_fraction, seed};
    *out = wrap(mc_dropout_variance(as_kspace(kspace), mask->m, ckpt->c.params, cfg));
  });
}

int pixcue_mc_mean_distribution_variance(const pixcue_checkpoint* ckpt,
                                         const pixcue_image* kspace,
                                         const pixcue_mask* mask, int passes,
                                         double dropout_fraction, uint64_t seed,
                                         pixcue_image** out) {
  return guarded([&] {
    check_ptr(ckpt, "checkpoint");
    check_ptr(kspace, "kspace");
    check_ptr(mask, "mask");
    check_ptr(out, "out");
    McConfig cfg{passes, dropout_fraction, seed};
    *out = wrap(
        mc_mean_distribution_variance(as_kspace(kspace), mask->m, ckpt->c.params, cfg));
  });
}

int pixcue_error_map(const pixcue_image* recon, const pixcue_image* reference,
                     pixcue_image** out) {
  return guarded([&] {
    check_ptr(recon, "recon");
    check_ptr(reference, "reference");
    check_ptr(out, "out");
    *out = wrap(error_map(as_real(recon, "recon"), as_real(reference, "reference")));
  });
}

/* ---- analysis ---- */

int pixcue_nmse(const pixcue_image* recon, const pixcue_image* reference, double* out) {
  return guarded([&] {
    check_ptr(recon, "recon");
    check_ptr(reference, "reference");
    check_ptr(out, "out");
    *out = nmse(as_real(recon, "recon"), as_real(reference, "reference"));
  });
}

int pixcue_psnr(const pixcue_image* recon, const pixcue_image* reference, double* out) {
  return guarded([&] {
    check_ptr(recon, "recon");
    check_ptr(reference, "reference");
    check_ptr(out, "out");
    *out = psnr_db(as_real(recon, "recon"), as_real(reference, "reference"));
  });
}

int pixcue_ssim(const pixcue_image* a, const pixcue_image* b, double* out) {
  return guarded([&] {
    check_ptr(a, "a");
    check_ptr(b, "b");
    check_ptr(out, "out");
    *out = ssim(as_real(a, "a"), as_real(b, "b"));
  });
}

int pixcue_pearson(const double* a, const double* b, size_t n, double* out) {
  return guarded([&] {
    check_ptr(a, "a");
    check_ptr(b, "b");
    check_ptr(out, "out");
    *out = pearson({a, n}, {b, n});
  });
}

int pixcue_linear_fit(const double* x, const double* y, size_t n, double* c0, double* c1,
                      double* r_squared) {
  return guarded([&] {
    check_ptr(x, "x");
    check_ptr(y, "y");
    FitResult fit = linear_fit({x, n}, {y, n});
    if (c0) *c0 = fit.c0;
    if (c1) *c1 = fit.c1;
    if (r_squared) *r_squared = fit.r_squared;
  });
}

int pixcue_exponential_fit(const double* x, const double* y, size_t n, double* scale,
                           double* rate, double* r_squared) {
  return guarded([&] {
    check_ptr(x, "x");
    check_ptr(y, "y");
    FitResult fit = exponential_fit({x, n}, {y, n});
    if (scale) *scale = fit.c0;
    if (rate) *rate = fit.c1;
    if (r_squared) *r_squared = fit.r_squared;
  });
}

/* ---- commands ---- */

int pixcue_cmd_simulate(const char* config_path, const char* out_dir, const uint64_t* seed) {
  return guarded([&] {
    check_ptr(out_dir, "out_dir");
    json cfg = load_config(opt_str(config_path),
                           seed ? std::optional<uint64_t>(*seed) : std::nullopt);
    run_simulate(cfg, out_dir);
  });
}

int pixcue_cmd_train(const char* config_path, const char* out_dir, const uint64_t* seed) {
  return guarded([&] {
    check_ptr(out_dir, "out_dir");
    json cfg = load_config(opt_str(config_path),
                           seed ? std::optional<uint64_t>(*seed) : std::nullopt);
    run_train(cfg, out_dir);
  });
}

int pixcue_cmd_reconstruct(const char* checkpoint, const char* kspace, const char* mask,
                           const char* out_dir) {
  return guarded([&] {
    check_ptr(checkpoint, "checkpoint");
    check_ptr(kspace, "kspace");
    check_ptr(mask, "mask");
    check_ptr(out_dir, "out_dir");
    run_reconstruct(checkpoint, kspace, mask, out_dir);
  });
}

int pixcue_cmd_uncertainty(const char* method, const char* volume, const char* checkpoint,
                           const char* kspace, const char* mask, int mc_passes,
                           double mc_dropout, uint64_t mc_seed, const char* out_dir) {
  return guarded([&] {
    check_ptr(method, "method");
    check_ptr(out_dir, "out_dir");
    UncertaintyRequest req;
    req.method = method;
    req.volume_path = opt_str(volume);
    req.checkpoint_path = opt_str(checkpoint);
    req.kspace_path = opt_str(kspace);
    req.mask_path = opt_str(mask);
    req.mc_passes = mc_passes;
    req.mc_dropout = mc_dropout;
    req.mc_seed = mc_seed;
    run_uncertainty(req, out_dir);
  });
}

int pixcue_cmd_experiment(const char* config_path, const char* out_dir,
                          const uint64_t* seed, int check) {
  int status = PIXCUE_OK;
  int rc = guarded([&] {
    check_ptr(out_dir, "out_dir");
    json cfg = load_config(opt_str(config_path),
                           seed ? std::optional<uint64_t>(*seed) : std::nullopt);
    CommandResult res = run_experiment(cfg, out_dir, check != 0);
    status = command_result_to_status(res);
    if (status != PIXCUE_OK) g_last_error = "one or more acceptance checks failed";
  });
  return rc != PIXCUE_OK ? rc : status;
}

int pixcue_cmd_report(const char* report_dir) {
  return guarded([&] {
    check_ptr(report_dir, "report_dir");
    run_report(report_dir);
  });
}

}  // extern "C"
