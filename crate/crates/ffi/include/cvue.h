#ifndef CVUE_H
#define CVUE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CvueStatus {
  CVUE_STATUS_OK = 0,
  CVUE_STATUS_NULL_POINTER = 1,
  CVUE_STATUS_INVALID_PARAMS = 2,
  CVUE_STATUS_LENGTH_MISMATCH = 3,
  CVUE_STATUS_DECODE_FAILURE = 4,
  CVUE_STATUS_NOT_POSITIVE_DEFINITE = 5,
  CVUE_STATUS_FORMAT = 6,
  CVUE_STATUS_INTERNAL = 7,
} CvueStatus;

typedef enum CvueConvention {
  /**
   * Amplitudes scale by `T`.
   */
  CVUE_CONVENTION_LINEAR = 0,
  /**
   * Amplitudes scale by `√T`.
   */
  CVUE_CONVENTION_SYMPLECTIC = 1,
} CvueConvention;

typedef enum CvueStrategy {
  CVUE_STRATEGY_HETERODYNE_SPLIT = 0,
  CVUE_STRATEGY_FORWARD_TO_BOB = 1,
  CVUE_STRATEGY_MEASURE_GUESS_BASIS = 2,
} CvueStrategy;

/**
 * A cipherstate. It remembers its codeword, which the reference decoder
 * needs.
 */
typedef struct CvueCipher CvueCipher;

/**
 * A secret key together with the parameters it was generated for.
 */
typedef struct CvueKey CvueKey;

/**
 * Protocol parameters.
 */
typedef struct CvueParams CvueParams;

typedef struct CvueChannel {
  double transmittance;
  double excess_noise;
  enum CvueConvention convention;
} CvueChannel;

typedef struct CvueRoundTrip {
  uint64_t trials;
  uint64_t failures;
  double failure_rate;
  double ci_lower;
  double ci_upper;
  uint64_t modes;
  uint64_t flipped_modes;
  double flip_rate;
} CvueRoundTrip;

/**
 * `bob_ber` / `charlie_ber` are NaN for a player without a share.
 */
typedef struct CvueGameOutcome {
  uint64_t trials;
  uint64_t wins;
  double win_rate;
  double ci_lower;
  double ci_upper;
  double bob_ber;
  double charlie_ber;
  double bound;
  bool bound_holds;
} CvueGameOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next library call on this thread.
 */
const char *cvue_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void cvue_string_free(char *s);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CvueStatus cvue_params_new(size_t message_len,
                                size_t codeword_len,
                                size_t correctable,
                                double alpha,
                                double squeezing,
                                struct CvueParams **out);

/**
 * # Safety
 * `params` must be null or a handle from [`cvue_params_new`].
 */
void cvue_params_free(struct CvueParams *params);

/**
 * # Safety
 * `params` must be a live handle and `out` valid for writes.
 */
enum CvueStatus cvue_key_generate(const struct CvueParams *params,
                                  uint64_t seed,
                                  struct CvueKey **out);

/**
 * # Safety
 * `key` must be null or a handle from this library.
 */
void cvue_key_free(struct CvueKey *key);

/**
 * Serializes a key to the JSON key-file format. Free the result with
 * [`cvue_string_free`].
 *
 * # Safety
 * `key` must be a live handle and `out` valid for writes.
 */
enum CvueStatus cvue_key_to_json(const struct CvueKey *key, char **out);

/**
 * Parses and validates a JSON key file.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for writes.
 */
enum CvueStatus cvue_key_from_json(const char *json, struct CvueKey **out);

/**
 * Encrypts a message given as `len` bytes, each 0 or 1. Encryption is
 * deterministic given the key.
 *
 * # Safety
 * `key` must be a live handle, `message` readable for `len` bytes and `out`
 * valid for writes.
 */
enum CvueStatus cvue_encrypt(const struct CvueKey *key,
                             const uint8_t *message,
                             size_t len,
                             struct CvueCipher **out);

/**
 * # Safety
 * `cipher` must be null or a handle from this library.
 */
void cvue_cipher_free(struct CvueCipher *cipher);

/**
 * Number of modes in a cipherstate, 0 for a null handle.
 *
 * # Safety
 * `cipher` must be null or a live handle.
 */
size_t cvue_cipher_num_modes(const struct CvueCipher *cipher);

/**
 * Sends the cipherstate through a loss channel in place. Decryption
 * afterwards rescales thresholds by the channel's amplitude gain only if
 * the caller passes the same channel to [`cvue_decrypt`].
 *
 * # Safety
 * `cipher` must be a live handle and `channel` readable.
 */
enum CvueStatus cvue_cipher_apply_channel(struct CvueCipher *cipher,
                                          const struct CvueChannel *channel);

/**
 * Decrypts into `message_out` (`len` bytes, each 0 or 1). `channel` may be
 * null for an untouched cipherstate. Returns
 * [`CvueStatus::DecodeFailure`] when more than `t` bits flipped.
 *
 * # Safety
 * Handles must be live, `message_out` writable for `len` bytes, `channel`
 * null or readable.
 */
enum CvueStatus cvue_decrypt(const struct CvueKey *key,
                             const struct CvueCipher *cipher,
                             const struct CvueChannel *channel,
                             uint64_t seed,
                             uint8_t *message_out,
                             size_t len);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CvueStatus cvue_ber_analytic(double alpha, double squeezing, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CvueStatus cvue_eps_df(size_t codeword_len,
                            size_t correctable,
                            double alpha,
                            double squeezing,
                            double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CvueStatus cvue_tau(size_t codeword_len, size_t correctable, double alpha, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CvueStatus cvue_asymptotic_margin(double alpha, double squeezing, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CvueStatus cvue_monogamy_bound_exact(size_t num_modes, double delta, double eps, double *out);

/**
 * # Safety
 * `channel` must be readable and `out` valid for writes.
 */
enum CvueStatus cvue_noisy_ber(double alpha,
                               double squeezing,
                               const struct CvueChannel *channel,
                               double *out);

/**
 * `min(1, 2^{-n+τ})` for the given parameters.
 *
 * # Safety
 * `params` must be a live handle and `out` valid for writes.
 */
enum CvueStatus cvue_win_bound(const struct CvueParams *params, double *out);

/**
 * # Safety
 * `params` must be a live handle, `channel` null or readable, `out` valid
 * for writes.
 */
enum CvueStatus cvue_run_round_trip(const struct CvueParams *params,
                                    uint64_t trials,
                                    uint64_t seed,
                                    const struct CvueChannel *channel,
                                    struct CvueRoundTrip *out);

/**
 * # Safety
 * `params` must be a live handle and `out` valid for writes.
 */
enum CvueStatus cvue_run_cloning_game(const struct CvueParams *params,
                                      enum CvueStrategy strategy,
                                      uint64_t trials,
                                      uint64_t seed,
                                      struct CvueGameOutcome *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CVUE_H */
