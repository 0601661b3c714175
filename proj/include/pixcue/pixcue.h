/* pixcue C API: undersampled MRI simulation, pixel-classification
 * reconstruction and per-pixel uncertainty estimation.
 *
 * Conventions:
 *   - Every function returning int yields PIXCUE_OK (0) on success or a
 *     pixcue_status error code; pixcue_last_error() describes the failure
 *     (thread-local).
 *   - Objects returned through out-parameters are owned by the caller and
 *     released with the matching *_free function.
 *   - Complex buffers are interleaved doubles (re, im), row-major.
 */
#ifndef PIXCUE_H
#define PIXCUE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PIXCUE_API __declspec(dllexport)
#else
#define PIXCUE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pixcue_status {
  PIXCUE_OK = 0,
  PIXCUE_ERR_INVALID_ARGUMENT = 1,
  PIXCUE_ERR_FORMAT = 2,
  PIXCUE_ERR_IO = 3,
  PIXCUE_ERR_RUNTIME = 4,
  PIXCUE_ERR_CHECK_FAILED = 5
} pixcue_status;

PIXCUE_API const char* pixcue_version(void);
PIXCUE_API const char* pixcue_strerror(int status);
PIXCUE_API const char* pixcue_last_error(void);

typedef struct pixcue_image pixcue_image;           /* real or complex 2D field */
typedef struct pixcue_mask pixcue_mask;             /* sampled phase-encode lines */
typedef struct pixcue_volume pixcue_volume;         /* per-pixel class distributions */
typedef struct pixcue_checkpoint pixcue_checkpoint; /* trained network parameters */

/* ---- images ---- */
PIXCUE_API int pixcue_image_create_real(int rows, int cols, const double* data,
                                        pixcue_image** out);
PIXCUE_API int pixcue_image_create_complex(int rows, int cols, const double* interleaved,
                                           pixcue_image** out);
PIXCUE_API void pixcue_image_free(pixcue_image* img);
PIXCUE_API int pixcue_image_rows(const pixcue_image* img, int* out);
PIXCUE_API int pixcue_image_cols(const pixcue_image* img, int* out);
PIXCUE_API int pixcue_image_is_complex(const pixcue_image* img, int* out);
/* capacity (in doubles) must be >= rows*cols for real, 2*rows*cols for complex */
PIXCUE_API int pixcue_image_copy_data(const pixcue_image* img, double* out,
                                      size_t capacity);
PIXCUE_API int pixcue_image_load(const char* path, pixcue_image** out);
PIXCUE_API int pixcue_image_save(const pixcue_image* img, const char* path);
PIXCUE_API int pixcue_magnitude(const pixcue_image* img, pixcue_image** out);

/* ---- synthetic acquisition ---- */
PIXCUE_API int pixcue_dft2(const pixcue_image* img, pixcue_image** out_kspace);
PIXCUE_API int pixcue_idft2(const pixcue_image* kspace, pixcue_image** out_img);
PIXCUE_API int pixcue_zero_filled(const pixcue_image* kspace, pixcue_image** out_img);
PIXCUE_API int pixcue_undersample(const pixcue_image* kspace, const pixcue_mask* mask,
                                  pixcue_image** out);
PIXCUE_API int pixcue_add_complex_noise(const pixcue_image* kspace, double sigma,
                                        uint64_t seed, pixcue_image** out);
/* spec_json mirrors the PhantomSpec JSON schema (see README) */
PIXCUE_API int pixcue_generate_phantom(const char* spec_json, uint64_t seed,
                                       pixcue_image** out);
PIXCUE_API int pixcue_insert_anomaly(const pixcue_image* img, const char* ellipse_json,
                                     pixcue_image** out);

/* ---- sampling masks ---- */
PIXCUE_API int pixcue_mask_equidistant(int n, double accel, double center_fraction,
                                       pixcue_mask** out);
PIXCUE_API int pixcue_mask_random(int n, double accel, double center_fraction,
                                  uint64_t seed, pixcue_mask** out);
PIXCUE_API void pixcue_mask_free(pixcue_mask* mask);
PIXCUE_API int pixcue_mask_size(const pixcue_mask* mask, int* out_n);
PIXCUE_API int pixcue_mask_lines(const pixcue_mask* mask, int* out_lines,
                                 size_t capacity, size_t* out_count);
PIXCUE_API int pixcue_mask_load(const char* path, pixcue_mask** out);
PIXCUE_API int pixcue_mask_save(const pixcue_mask* mask, const char* path);

/* ---- quantization ---- */
PIXCUE_API int pixcue_quantize_one_hot(const pixcue_image* img, int n_bits,
                                       pixcue_volume** out);
PIXCUE_API int pixcue_expectation_image(const pixcue_volume* vol, pixcue_image** out);
PIXCUE_API int pixcue_cross_entropy_mean(const pixcue_volume* predicted,
                                         const pixcue_volume* target, double* out);
PIXCUE_API void pixcue_volume_free(pixcue_volume* vol);
PIXCUE_API int pixcue_volume_dims(const pixcue_volume* vol, int* rows, int* cols,
                                  int* classes);
PIXCUE_API int pixcue_volume_load(const char* path, pixcue_volume** out);
PIXCUE_API int pixcue_volume_save(const pixcue_volume* vol, const char* path);

/* ---- reconstruction ---- */
PIXCUE_API int pixcue_checkpoint_load(const char* path, pixcue_checkpoint** out);
PIXCUE_API void pixcue_checkpoint_free(pixcue_checkpoint* ckpt);
/* out_probs may be NULL when only the expectation image is wanted */
PIXCUE_API int pixcue_reconstruct(const pixcue_checkpoint* ckpt,
                                  const pixcue_image* kspace, const pixcue_mask* mask,
                                  pixcue_image** out_recon, pixcue_volume** out_probs);

/* ---- uncertainty ---- */
PIXCUE_API int pixcue_exact_variance_map(const pixcue_volume* vol, pixcue_image** out);
PIXCUE_API int pixcue_fast_variance_map(const pixcue_volume* vol, pixcue_image** out);
PIXCUE_API int pixcue_mc_dropout_variance(const pixcue_checkpoint* ckpt,
                                          const pixcue_image* kspace,
                                          const pixcue_mask* mask, int passes,
                                          double dropout_fraction, uint64_t seed,
                                          pixcue_image** out);
PIXCUE_API int pixcue_mc_mean_distribution_variance(const pixcue_checkpoint* ckpt,
                                                    const pixcue_image* kspace,
                                                    const pixcue_mask* mask, int passes,
                                                    double dropout_fraction,
                                                    uint64_t seed, pixcue_image** out);
PIXCUE_API int pixcue_error_map(const pixcue_image* recon, const pixcue_image* reference,
                                pixcue_image** out);

/* ---- analysis ---- */
PIXCUE_API int pixcue_nmse(const pixcue_image* recon, const pixcue_image* reference,
                           double* out);
PIXCUE_API int pixcue_psnr(const pixcue_image* recon, const pixcue_image* reference,
                           double* out);
PIXCUE_API int pixcue_ssim(const pixcue_image* a, const pixcue_image* b, double* out);
PIXCUE_API int pixcue_pearson(const double* a, const double* b, size_t n, double* out);
PIXCUE_API int pixcue_linear_fit(const double* x, const double* y, size_t n, double* c0,
                                 double* c1, double* r_squared);
PIXCUE_API int pixcue_exponential_fit(const double* x, const double* y, size_t n,
                                      double* scale, double* rate, double* r_squared);

/* ---- commands backing the CLI ----
 * config_path may be NULL or empty: the built-in desk-scale defaults apply.
 * seed may be NULL: config seeds are used as-is.
 */
PIXCUE_API int pixcue_cmd_simulate(const char* config_path, const char* out_dir,
                                   const uint64_t* seed);
PIXCUE_API int pixcue_cmd_train(const char* config_path, const char* out_dir,
                                const uint64_t* seed);
PIXCUE_API int pixcue_cmd_reconstruct(const char* checkpoint, const char* kspace,
                                      const char* mask, const char* out_dir);
PIXCUE_API int pixcue_cmd_uncertainty(const char* method, const char* volume,
                                      const char* checkpoint, const char* kspace,
                                      const char* mask, int mc_passes, double mc_dropout,
                                      uint64_t mc_seed, const char* out_dir);
/* returns PIXCUE_ERR_CHECK_FAILED when check!=0 and an acceptance property fails */
PIXCUE_API int pixcue_cmd_experiment(const char* config_path, const char* out_dir,
                                     const uint64_t* seed, int check);
PIXCUE_API int pixcue_cmd_report(const char* report_dir);

#ifdef __cplusplus
}
#endif

#endif /* PIXCUE_H */
