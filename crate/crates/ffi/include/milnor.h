#ifndef MILNOR_H
#define MILNOR_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MilnorStatus {
  MILNOR_STATUS_OK = 0,
  MILNOR_STATUS_NULL_POINTER = 1,
  MILNOR_STATUS_INVALID_INPUT = 2,
  MILNOR_STATUS_DEGENERATE = 3,
  MILNOR_STATUS_CRYPTO = 4,
  MILNOR_STATUS_NUMERIC = 5,
  MILNOR_STATUS_PANIC = 6,
} MilnorStatus;

typedef struct MilnorCatalog MilnorCatalog;

typedef struct MilnorCiphertext MilnorCiphertext;

typedef struct MilnorCriticalPoints MilnorCriticalPoints;

typedef struct MilnorGerm MilnorGerm;

typedef struct MilnorKeyPair MilnorKeyPair;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library from the same thread.
 */
const char *milnor_last_error(void);

/**
 * Parses germ text (the `.germ` file format).
 *
 * # Safety
 * `text` must be a nul-terminated string and `out_germ` a valid pointer.
 */
enum MilnorStatus milnor_germ_parse(const char *text, struct MilnorGerm **out_germ);

/**
 * # Safety
 * `germ` must come from `milnor_germ_parse` and not be used afterwards.
 */
void milnor_germ_free(struct MilnorGerm *germ);

/**
 * # Safety
 * `germ` must be a live handle or null.
 */
size_t milnor_germ_n_vars(const struct MilnorGerm *germ);

/**
 * # Safety
 * `x` must point to `len` doubles.
 */
enum MilnorStatus milnor_germ_evaluate(const struct MilnorGerm *germ,
                                       const double *x,
                                       size_t len,
                                       double *out_value);

/**
 * Critical points of `f + s * sum(quad_i x_i^2)` in the cube `[lo, hi]^m`,
 * seeded from a grid of `grid_per_axis` points per axis.
 *
 * # Safety
 * `quad` must point to `len` doubles, where `len` is the germ's variable count.
 */
enum MilnorStatus milnor_morsify(const struct MilnorGerm *germ,
                                 const double *quad,
                                 size_t len,
                                 double s,
                                 double lo,
                                 double hi,
                                 size_t grid_per_axis,
                                 struct MilnorCriticalPoints **out_points);

/**
 * # Safety
 * `points` must be a live handle or null.
 */
size_t milnor_critical_points_len(const struct MilnorCriticalPoints *points);

/**
 * Copies point `i`: its location into `location` (room for `len` doubles),
 * its critical value and its Morse index.
 *
 * # Safety
 * `location` must have room for `len` doubles; the other pointers must be valid.
 */
enum MilnorStatus milnor_critical_points_get(const struct MilnorCriticalPoints *points,
                                             size_t i,
                                             double *location,
                                             size_t len,
                                             double *out_value,
                                             size_t *out_index);

/**
 * # Safety
 * `points` must come from `milnor_morsify` and not be used afterwards.
 */
void milnor_critical_points_free(struct MilnorCriticalPoints *points);

/**
 * Gauss hypergeometric function 2F1(a, b; c; z) for |z| < 1. The
 * parameters must be exact binary fractions of modest size.
 *
 * # Safety
 * `out_value` must be a valid pointer.
 */
enum MilnorStatus milnor_hyp2f1(double a, double b, double c, double z, double *out_value);

/**
 * Monte Carlo period of `dx / (t - f)` over the vanishing cycle of the
 * quadratic form with `lambda` negative squares in `m` variables.
 *
 * # Safety
 * `out_value` and `out_std_error` must be valid pointers.
 */
enum MilnorStatus milnor_quadratic_period(size_t m,
                                          size_t lambda,
                                          double eta,
                                          double t,
                                          size_t n_samples,
                                          uint64_t seed,
                                          double *out_value,
                                          double *out_std_error);

/**
 * The catalog bundled with the library.
 *
 * # Safety
 * `out_catalog` must be a valid pointer.
 */
enum MilnorStatus milnor_catalog_shipped(struct MilnorCatalog **out_catalog);

/**
 * Loads a catalog file; germ paths are resolved next to it.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out_catalog` a valid pointer.
 */
enum MilnorStatus milnor_catalog_load(const char *path, struct MilnorCatalog **out_catalog);

/**
 * # Safety
 * `catalog` must be a live handle or null.
 */
size_t milnor_catalog_len(const struct MilnorCatalog *catalog);

/**
 * Writes the message of entry `i` as weights into `weights` (room for
 * `len` doubles) and its length into `out_len`. Passing `len = 0` only
 * reports the length.
 *
 * # Safety
 * `weights` must have room for `len` doubles; `out_len` must be valid.
 */
enum MilnorStatus milnor_catalog_message(const struct MilnorCatalog *catalog,
                                         size_t i,
                                         double *weights,
                                         size_t len,
                                         size_t *out_len);

/**
 * # Safety
 * `catalog` must come from a catalog constructor and not be used afterwards.
 */
void milnor_catalog_free(struct MilnorCatalog *catalog);

/**
 * Draws a public key in `(0, s0]` for entry `entry` and derives the
 * secret Morse vector.
 *
 * # Safety
 * `catalog` must be live and `out_keys` valid.
 */
enum MilnorStatus milnor_keygen(const struct MilnorCatalog *catalog,
                                size_t entry,
                                uint64_t seed,
                                struct MilnorKeyPair **out_keys);

/**
 * # Safety
 * `keys` must be a live handle or null.
 */
double milnor_keypair_public(const struct MilnorKeyPair *keys);

/**
 * Length of the secret Morse vector.
 *
 * # Safety
 * `keys` must be a live handle or null.
 */
size_t milnor_keypair_secret_len(const struct MilnorKeyPair *keys);

/**
 * # Safety
 * `keys` must come from `milnor_keygen` and not be used afterwards.
 */
void milnor_keypair_free(struct MilnorKeyPair *keys);

/**
 * Encrypts catalog entry `entry` under `keys` with scheme 1 or 2.
 *
 * # Safety
 * `catalog` and `keys` must be live and `out_ciphertext` valid.
 */
enum MilnorStatus milnor_encrypt(const struct MilnorCatalog *catalog,
                                 const struct MilnorKeyPair *keys,
                                 uint32_t scheme,
                                 size_t entry,
                                 struct MilnorCiphertext **out_ciphertext);

/**
 * Number of index-zero points or entries in the ciphertext.
 *
 * # Safety
 * `ciphertext` must be a live handle or null.
 */
size_t milnor_ciphertext_count(const struct MilnorCiphertext *ciphertext);

/**
 * # Safety
 * `ciphertext` must come from `milnor_encrypt` and not be used afterwards.
 */
void milnor_ciphertext_free(struct MilnorCiphertext *ciphertext);

/**
 * Decrypts to the index of the catalog entry holding the message.
 *
 * # Safety
 * All handles must be live and `out_entry` valid.
 */
enum MilnorStatus milnor_decrypt(const struct MilnorCatalog *catalog,
                                 const struct MilnorKeyPair *keys,
                                 const struct MilnorCiphertext *ciphertext,
                                 size_t *out_entry);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MILNOR_H */
