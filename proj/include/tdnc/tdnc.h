/* tdnc — multi-rate Tucker transform image codec.
 *
 * C interface to the shared library: opaque handles, status codes, and
 * explicit ownership. Every function that can fail returns a tdnc_status;
 * tdnc_last_error() holds a human-readable detail message for the calling
 * thread. Buffers returned through out-parameters are released with
 * tdnc_buffer_free(), handles with their matching *_free() function.
 */
#ifndef TDNC_H
#define TDNC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TDNC_API __declspec(dllexport)
#else
#define TDNC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tdnc_status {
    TDNC_OK = 0,
    TDNC_ERR_INVALID_ARGUMENT = 1,
    TDNC_ERR_IO = 2,
    TDNC_ERR_PARSE = 3,
    TDNC_ERR_MISSING_MODEL = 4,
    TDNC_ERR_INTERNAL = 5
} tdnc_status;

TDNC_API const char* tdnc_status_name(tdnc_status status);
TDNC_API const char* tdnc_last_error(void); /* thread-local; empty when no error */
TDNC_API uint32_t tdnc_version(void);       /* (major << 16) | minor */

/* One operating point: Tucker ranks (stated for the 40x40x32 reference
 * shape), the number of quantizer decision intervals, and the factor-matrix
 * storage bit depth (8, 12 or 16). */
typedef struct tdnc_rate_config {
    uint32_t id;
    uint32_t r1, r2, r3;
    uint32_t intervals;
    uint32_t factor_bits;
} tdnc_rate_config;

typedef struct tdnc_image tdnc_image;
typedef struct tdnc_tensor tdnc_tensor;
typedef struct tdnc_instance tdnc_instance;

/* ---- images (8-bit, 1 or 3 channels, row-major interleaved) ---- */

TDNC_API tdnc_status tdnc_image_create(uint32_t width, uint32_t height, uint32_t channels,
                                       const uint8_t* samples, tdnc_image** out);
TDNC_API tdnc_status tdnc_image_load(const char* path, tdnc_image** out); /* PNG/PPM/PGM */
TDNC_API tdnc_status tdnc_image_save(const tdnc_image* img, const char* path);
TDNC_API uint32_t tdnc_image_width(const tdnc_image* img);
TDNC_API uint32_t tdnc_image_height(const tdnc_image* img);
TDNC_API uint32_t tdnc_image_channels(const tdnc_image* img);
TDNC_API const uint8_t* tdnc_image_samples(const tdnc_image* img);
TDNC_API void tdnc_image_free(tdnc_image* img);

/* ---- tensors (3-order, for latent-mode coding; TDT3 file format) ---- */

TDNC_API tdnc_status tdnc_tensor_create(uint32_t d1, uint32_t d2, uint32_t d3,
                                        const double* data, tdnc_tensor** out);
TDNC_API tdnc_status tdnc_tensor_load(const char* path, tdnc_tensor** out);
TDNC_API tdnc_status tdnc_tensor_save(const tdnc_tensor* tensor, const char* path);
TDNC_API void tdnc_tensor_dims(const tdnc_tensor* tensor, uint32_t* d1, uint32_t* d2, uint32_t* d3);
TDNC_API const double* tdnc_tensor_data(const tdnc_tensor* tensor);
TDNC_API void tdnc_tensor_free(tdnc_tensor* tensor);

/* ---- codec instances ---- */

/* Fits one quantizer model per config over the given corpus files. Entries
 * may be images (PNG/PPM/PGM, tensorized as 16x16 patch stacks) or TDT3
 * tensors (used as-is); mixing both in one corpus is not allowed. */
TDNC_API tdnc_status tdnc_fit(const char* const* corpus_paths, size_t corpus_count,
                              const tdnc_rate_config* configs, size_t config_count,
                              tdnc_instance** out);
TDNC_API tdnc_status tdnc_instance_save(const tdnc_instance* inst, const char* path);
TDNC_API tdnc_status tdnc_instance_load(const char* path, tdnc_instance** out);
TDNC_API size_t tdnc_instance_config_count(const tdnc_instance* inst);
TDNC_API tdnc_status tdnc_instance_config_at(const tdnc_instance* inst, size_t index,
                                             tdnc_rate_config* out);
/* Magnitude samples pooled when the config was fitted; 0 for derived configs
 * or an out-of-range index. */
TDNC_API uint64_t tdnc_instance_sample_count(const tdnc_instance* inst, size_t index);
/* Registers a config that was not fitted, binding it to the closest fitted
 * model (reused when the interval count matches, derived otherwise). */
TDNC_API tdnc_status tdnc_instance_add_derived_config(tdnc_instance* inst,
                                                      const tdnc_rate_config* config);
TDNC_API void tdnc_instance_free(tdnc_instance* inst);

/* ---- compression ---- */

TDNC_API tdnc_status tdnc_compress_image(const tdnc_instance* inst, const tdnc_image* img,
                                         uint32_t config_id, uint8_t** out, size_t* out_size);
TDNC_API tdnc_status tdnc_compress_tensor(const tdnc_instance* inst, const tdnc_tensor* tensor,
                                          uint32_t config_id, uint8_t** out, size_t* out_size);
TDNC_API tdnc_status tdnc_decompress_image(const tdnc_instance* inst, const uint8_t* payload,
                                           size_t payload_size, tdnc_image** out);
TDNC_API tdnc_status tdnc_decompress_tensor(const tdnc_instance* inst, const uint8_t* payload,
                                            size_t payload_size, tdnc_tensor** out);
TDNC_API void tdnc_buffer_free(uint8_t* buffer);

typedef struct tdnc_payload_info {
    uint32_t config_id;
    uint32_t latent; /* 1 when the payload holds a raw tensor */
    uint32_t d1, d2, d3;
    uint32_t r1, r2, r3;
    uint32_t intervals;
    uint32_t factor_bits;
    uint32_t width, height, channels; /* zero in latent mode */
    uint64_t total_bits;
} tdnc_payload_info;

TDNC_API tdnc_status tdnc_payload_inspect(const uint8_t* payload, size_t payload_size,
                                          tdnc_payload_info* out);

/* Picks the config whose analytic worst-case bpp bound best fits the target;
 * *overshoot is set when even the smallest config exceeds it. */
TDNC_API tdnc_status tdnc_select_config(const tdnc_instance* inst, double target_bpp,
                                        uint32_t width, uint32_t height, uint32_t channels,
                                        uint32_t* config_id, int* overshoot);

/* ---- metrics ---- */

/* PSNR in dB; +infinity when the images are identical. */
TDNC_API tdnc_status tdnc_psnr(const tdnc_image* a, const tdnc_image* b, double* out);
TDNC_API tdnc_status tdnc_ms_ssim(const tdnc_image* a, const tdnc_image* b, double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TDNC_H */
