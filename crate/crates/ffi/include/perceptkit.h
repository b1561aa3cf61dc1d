#ifndef PERCEPTKIT_H
#define PERCEPTKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PkStatus {
  PK_OK = 0,
  PK_ERR_NULL = 1,
  PK_ERR_INVALID_ARG = 2,
  PK_ERR_IO = 3,
  PK_ERR_DECODE = 4,
  PK_ERR_VERSION = 5,
  PK_ERR_BUFFER_TOO_SMALL = 6,
  PK_ERR_PANIC = 7,
} PkStatus;

/**
 * Opaque multi-index over stored hashes.
 */
typedef struct PkIndex PkIndex;

/**
 * Opaque temporal video signature.
 */
typedef struct PkSignature PkSignature;

/**
 * A 256-bit hash; bit 0 is the most significant bit of `bytes[0]`.
 */
typedef struct PkHash {
  uint8_t bytes[32];
} PkHash;

typedef struct PkQueryResult {
  uint32_t id;
  uint32_t distance;
} PkQueryResult;

typedef struct PkMatch {
  double level1;
  /**
   * Meaningful only when `level2_present` is nonzero.
   */
  double level2;
  bool level2_present;
  bool matched;
  bool degenerate;
} PkMatch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer is valid until the next call on the same thread.
 */
const char *pk_last_error(void);

/**
 * Hashes packed 8-bit RGB pixels, row-major, `width * height * 3` bytes.
 *
 * # Safety
 * `rgb` must point to `width * height * 3` readable bytes; `out` and
 * `quality` (if non-null) must be writable.
 */
enum PkStatus pk_pdq_hash_rgb(const uint8_t *rgb,
                              size_t width,
                              size_t height,
                              struct PkHash *out,
                              uint8_t *quality);

/**
 * Decodes and hashes an image file (PNG, JPEG, TIFF or BMP).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` and `quality` (if
 * non-null) must be writable.
 */
enum PkStatus pk_pdq_hash_file(const char *path, struct PkHash *out, uint8_t *quality);

/**
 * Hamming distance, or `u32::MAX` if either pointer is null.
 *
 * # Safety
 * Non-null pointers must be readable.
 */
uint32_t pk_hamming(const struct PkHash *a, const struct PkHash *b);

/**
 * Writes 64 lowercase hex digits and a NUL into `out` (65 bytes).
 *
 * # Safety
 * `hash` must be readable and `out` writable for 65 bytes.
 */
enum PkStatus pk_hash_to_hex(const struct PkHash *hash, char *out);

/**
 * Parses 64 hex digits.
 *
 * # Safety
 * `hex` must be a NUL-terminated string and `out` writable.
 */
enum PkStatus pk_hash_from_hex(const char *hex, struct PkHash *out);

/**
 * A new empty index. Release with [`pk_index_free`].
 */
struct PkIndex *pk_index_new(void);

/**
 * # Safety
 * `index` must come from this library and not be used afterwards.
 */
void pk_index_free(struct PkIndex *index);

/**
 * Number of stored entries; 0 for null.
 *
 * # Safety
 * `index` must be null or a live handle.
 */
size_t pk_index_len(const struct PkIndex *index);

/**
 * Stores `hash` with an opaque label and writes its id to `out_id`.
 *
 * # Safety
 * `index` must be a live handle; `label` must be readable for `label_len`
 * bytes (may be null when `label_len` is 0); `out_id` may be null.
 */
enum PkStatus pk_index_insert(struct PkIndex *index,
                              const struct PkHash *hash,
                              const uint8_t *label,
                              size_t label_len,
                              uint32_t *out_id);

/**
 * Finds every entry within `radius`, sorted by (distance, id).
 *
 * The total number of hits goes to `out_count`. Up to `capacity` of them
 * are written to `results`; if there are more, the call returns
 * `PK_ERR_BUFFER_TOO_SMALL` and can be repeated with a larger buffer.
 *
 * # Safety
 * `index` must be a live handle; `results` must be writable for
 * `capacity` elements (may be null when `capacity` is 0).
 */
enum PkStatus pk_index_query(const struct PkIndex *index,
                             const struct PkHash *hash,
                             uint32_t radius,
                             struct PkQueryResult *results,
                             size_t capacity,
                             size_t *out_count);

/**
 * Copies the label of entry `id` into `buf` and its length to `out_len`.
 * Returns `PK_ERR_BUFFER_TOO_SMALL` if `capacity` is short.
 *
 * # Safety
 * `index` must be a live handle; `buf` writable for `capacity` bytes.
 */
enum PkStatus pk_index_label(const struct PkIndex *index,
                             uint32_t id,
                             uint8_t *buf,
                             size_t capacity,
                             size_t *out_len);

/**
 * Writes a snapshot file.
 *
 * # Safety
 * `index` must be a live handle and `path` NUL-terminated.
 */
enum PkStatus pk_index_save(const struct PkIndex *index, const char *path);

/**
 * Loads a snapshot file into a new handle.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` writable.
 */
enum PkStatus pk_index_load(const char *path, struct PkIndex **out);

/**
 * Reads a signature file into a new handle.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` writable.
 */
enum PkStatus pk_signature_read(const char *path, struct PkSignature **out);

/**
 * Parses a signature from memory into a new handle.
 *
 * # Safety
 * `data` must be readable for `len` bytes and `out` writable.
 */
enum PkStatus pk_signature_from_bytes(const uint8_t *data, size_t len, struct PkSignature **out);

/**
 * # Safety
 * `sig` must come from this library and not be used afterwards.
 */
void pk_signature_free(struct PkSignature *sig);

/**
 * Two-phase comparison. Pass `t1 = -1` to always score level 2.
 *
 * # Safety
 * `a` and `b` must be live handles and `out` writable.
 */
enum PkStatus pk_signature_compare(const struct PkSignature *a,
                                   const struct PkSignature *b,
                                   double t1,
                                   double t2,
                                   struct PkMatch *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERCEPTKIT_H */
