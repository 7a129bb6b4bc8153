#ifndef HEPACROP_H
#define HEPACROP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum HcStatus {
  HC_STATUS_OK = 0,
  HC_STATUS_NULL_POINTER = 1,
  HC_STATUS_INVALID_ARGUMENT = 2,
  HC_STATUS_PARSE = 3,
  HC_STATUS_GEOMETRY = 4,
  HC_STATUS_EXTRACT = 5,
  /**
   * The result is mathematically undefined, e.g. AUC with one class.
   */
  HC_STATUS_UNDEFINED = 6,
  HC_STATUS_OUT_OF_RANGE = 7,
  HC_STATUS_PANIC = 8,
} HcStatus;

/**
 * Crops extracted from one patient.
 */
typedef struct HcCropList HcCropList;

/**
 * A parsed binary annotation mask.
 */
typedef struct HcMask HcMask;

/**
 * A parsed CT volume.
 */
typedef struct HcVolume HcVolume;

/**
 * Extraction parameters; see [`hc_preprocess_config_default`].
 */
typedef struct HcPreprocessConfig {
  double epsilon;
  double border_mm;
  size_t resolution;
  double window_center;
  double window_width;
  bool mean_pre_opening;
} HcPreprocessConfig;

/**
 * Borrowed view of one crop. Pointers stay valid until the list is freed.
 */
typedef struct HcCropInfo {
  uint32_t lesion_id;
  size_t slice_index;
  size_t resolution;
  /**
   * `resolution * resolution` grayscale bytes, row-major.
   */
  const uint8_t *pixels;
  size_t pixel_count;
  /**
   * Half-open source rectangle `x0, y0, x1, y1` in slice pixels.
   */
  int64_t bbox[4];
  double pad_fraction;
  size_t slice_area;
  double mean_area;
} HcCropInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *hc_last_error_message(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *hc_version(void);

/**
 * Parse a NIfTI-1 stream (optionally gzip-compressed) as HU intensities.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be writable.
 */
enum HcStatus hc_volume_parse_nifti(const uint8_t *data, size_t len, struct HcVolume **out);

/**
 * # Safety
 * `volume` must come from [`hc_volume_parse_nifti`]; `dims` must hold 3 values.
 */
enum HcStatus hc_volume_dims(const struct HcVolume *volume, size_t *dims);

/**
 * Spacing in mm along x, y, z.
 *
 * # Safety
 * `volume` must be a live handle; `spacing` must hold 3 values.
 */
enum HcStatus hc_volume_spacing(const struct HcVolume *volume, double *spacing);

/**
 * Borrow the x-fastest HU data. Valid until the volume is freed.
 *
 * # Safety
 * `volume` must be a live handle; `data` and `len` must be writable.
 */
enum HcStatus hc_volume_data(const struct HcVolume *volume, const float **data, size_t *len);

/**
 * # Safety
 * `volume` must be null or a handle not yet freed.
 */
void hc_volume_free(struct HcVolume *volume);

/**
 * Parse a NIfTI-1 mask; any nonzero voxel is foreground.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be writable.
 */
enum HcStatus hc_mask_parse_nifti(const uint8_t *data, size_t len, struct HcMask **out);

/**
 * # Safety
 * `mask` must be a live handle; `dims` must hold 3 values.
 */
enum HcStatus hc_mask_dims(const struct HcMask *mask, size_t *dims);

/**
 * # Safety
 * `mask` must be a live handle; `count` must be writable.
 */
enum HcStatus hc_mask_positive_count(const struct HcMask *mask, size_t *count);

/**
 * # Safety
 * `mask` must be null or a handle not yet freed.
 */
void hc_mask_free(struct HcMask *mask);

/**
 * Map one HU value to 8-bit gray under the window `center`/`width`.
 *
 * # Safety
 * `out` must be writable.
 */
enum HcStatus hc_window_hu(double hu, double center, double width, uint8_t *out);

/**
 * Default extraction parameters.
 */
struct HcPreprocessConfig hc_preprocess_config_default(void);

/**
 * Extract the lesion crops of one patient.
 *
 * # Safety
 * Handles must be live, `config` readable, `patient_id` NUL-terminated
 * UTF-8, and `out` writable.
 */
enum HcStatus hc_preprocess_patient(const struct HcVolume *volume,
                                    const struct HcMask *mask,
                                    const struct HcPreprocessConfig *config,
                                    const char *patient_id,
                                    struct HcCropList **out);

/**
 * Number of crops in the list; 0 for a null list.
 *
 * # Safety
 * `list` must be null or a live handle.
 */
size_t hc_crop_list_len(const struct HcCropList *list);

/**
 * Number of lesions dropped because nothing survived the opening.
 *
 * # Safety
 * `list` must be null or a live handle.
 */
size_t hc_crop_list_skipped(const struct HcCropList *list);

/**
 * # Safety
 * `list` must be a live handle; `info` must be writable.
 */
enum HcStatus hc_crop_list_get(const struct HcCropList *list,
                               size_t index,
                               struct HcCropInfo *info);

/**
 * # Safety
 * `list` must be null or a handle not yet freed.
 */
void hc_crop_list_free(struct HcCropList *list);

/**
 * Area under the ROC curve with mid-rank ties. `labels` holds 0/1 bytes.
 * Returns `Undefined` when only one class is present.
 *
 * # Safety
 * `scores` and `labels` must hold `n` values; `out` must be writable.
 */
enum HcStatus hc_auc_binary(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Mean and Student-t 95% half-width of `n >= 2` values.
 *
 * # Safety
 * `values` must hold `n` values; `mean` and `half_width` must be writable.
 */
enum HcStatus hc_aggregate_ci(const double *values, size_t n, double *mean, double *half_width);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEPACROP_H */
