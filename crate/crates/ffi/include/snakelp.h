#ifndef SNAKELP_H
#define SNAKELP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SnakelpShape {
  SNAKELP_SHAPE_ARROW = 0,
  SNAKELP_SHAPE_HEART = 1,
  SNAKELP_SHAPE_RECTANGLE = 2,
  SNAKELP_SHAPE_STAR = 3,
  SNAKELP_SHAPE_MULTI = 4,
} SnakelpShape;

typedef enum SnakelpStatus {
  SNAKELP_STATUS_OK = 0,
  SNAKELP_STATUS_NULL_POINTER = 1,
  SNAKELP_STATUS_INVALID_ARGUMENT = 2,
  SNAKELP_STATUS_IO = 3,
  SNAKELP_STATUS_FORMAT = 4,
  SNAKELP_STATUS_SEGMENTATION = 5,
  SNAKELP_STATUS_SOLVER = 6,
  SNAKELP_STATUS_PANIC = 7,
} SnakelpStatus;

// Opaque 8-bit grayscale image.
typedef struct SnakelpImage SnakelpImage;

// Opaque segmentation result.
typedef struct SnakelpResult SnakelpResult;

// Segmentation parameters. Zero `k` and `tile` and non-positive `theta` and
// negative `tau` select the library defaults.
typedef struct SnakelpSegmentConfig {
  size_t k;
  size_t t_budget;
  // Tile size; 0 segments the whole image as one region.
  size_t tile;
  uint64_t seed;
  double theta;
  double tau;
} SnakelpSegmentConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null after a success.
// The pointer stays valid until the next call into the library.
const char *snakelp_last_error(void);

// Library version as a static NUL-terminated string.
const char *snakelp_version(void);

struct SnakelpSegmentConfig snakelp_segment_config_default(void);

// Copies `len = width·height` row-major bytes into a new image.
//
// # Safety
// `data` must point to `len` readable bytes; `out` must be writable.
enum SnakelpStatus snakelp_image_new(size_t width,
                                     size_t height,
                                     const uint8_t *data,
                                     size_t len,
                                     struct SnakelpImage **out);

// Reads a binary PGM file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum SnakelpStatus snakelp_image_load(const char *path, struct SnakelpImage **out);

// Writes a binary PGM file.
//
// # Safety
// `img` must be a live handle and `path` a NUL-terminated string.
enum SnakelpStatus snakelp_image_save(const struct SnakelpImage *img, const char *path);

// # Safety
// `img` must be null or a live handle.
size_t snakelp_image_width(const struct SnakelpImage *img);

// # Safety
// `img` must be null or a live handle.
size_t snakelp_image_height(const struct SnakelpImage *img);

// Row-major pixels, valid while the handle lives.
//
// # Safety
// `img` must be null or a live handle.
const uint8_t *snakelp_image_data(const struct SnakelpImage *img);

// # Safety
// `img` must be null or a handle not yet freed. Result masks are owned by
// their result and must not be passed here.
void snakelp_image_free(struct SnakelpImage *img);

// # Safety
// `out` must be writable.
enum SnakelpStatus snakelp_generate_shape(enum SnakelpShape shape,
                                          size_t width,
                                          size_t height,
                                          struct SnakelpImage **out);

// New image with additive Gaussian noise of standard deviation `sigma`.
//
// # Safety
// `img` must be a live handle; `out` must be writable.
enum SnakelpStatus snakelp_add_noise(const struct SnakelpImage *img,
                                     double sigma,
                                     uint64_t seed,
                                     struct SnakelpImage **out);

// Segments `img`; a null `config` uses the defaults.
//
// # Safety
// `img` must be a live handle, `config` null or readable, `out` writable.
enum SnakelpStatus snakelp_segment(const struct SnakelpImage *img,
                                   const struct SnakelpSegmentConfig *config,
                                   struct SnakelpResult **out);

// Filled mask, owned by the result.
//
// # Safety
// `res` must be null or a live handle.
const struct SnakelpImage *snakelp_result_mask(const struct SnakelpResult *res);

// # Safety
// `res` must be null or a live handle.
size_t snakelp_result_contour_len(const struct SnakelpResult *res);

// Copies up to `cap` contour pixels into `rows` and `cols`; returns the
// number copied.
//
// # Safety
// `res` must be null or a live handle; `rows` and `cols` must hold `cap`
// elements each.
size_t snakelp_result_contour(const struct SnakelpResult *res,
                              size_t *rows,
                              size_t *cols,
                              size_t cap);

// Final objective summed over regions, or NaN when nothing was solved.
//
// # Safety
// `res` must be null or a live handle.
double snakelp_result_objective(const struct SnakelpResult *res);

// Full result as JSON; release with [`snakelp_string_free`].
//
// # Safety
// `res` must be a live handle; `out` must be writable.
enum SnakelpStatus snakelp_result_json(const struct SnakelpResult *res, char **out);

// # Safety
// `res` must be null or a handle not yet freed.
void snakelp_result_free(struct SnakelpResult *res);

// Dice similarity of two same-size masks (nonzero is foreground).
//
// # Safety
// Both images must be live handles; `out` must be writable.
enum SnakelpStatus snakelp_dice(const struct SnakelpImage *pred,
                                const struct SnakelpImage *truth,
                                double *out);

// Solves an LP given in the JSON dump format and writes the outcome as JSON.
// A missing `x0` triggers a phase-one search for a start.
//
// # Safety
// `lp_json` must be a NUL-terminated string; `out` must be writable.
enum SnakelpStatus snakelp_solve_lp_json(const char *lp_json, char **out);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void snakelp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SNAKELP_H */
