#ifndef EQUILINK_H
#define EQUILINK_H

/* Generated with cbindgen:0.29.4 */

/* Regenerated by build.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EquilinkStatus {
  EQUILINK_STATUS_OK = 0,
  EQUILINK_STATUS_NULL_POINTER = 1,
  EQUILINK_STATUS_INVALID_UTF8 = 2,
  EQUILINK_STATUS_DOMAIN = 3,
  EQUILINK_STATUS_CONFIG = 4,
  EQUILINK_STATUS_PROTOCOL = 5,
  EQUILINK_STATUS_PRECONDITION = 6,
  EQUILINK_STATUS_FRAMING = 7,
  EQUILINK_STATUS_ABORTED = 8,
  EQUILINK_STATUS_TIMEOUT = 9,
  EQUILINK_STATUS_CLOSED = 10,
  EQUILINK_STATUS_IO = 11,
  EQUILINK_STATUS_JSON = 12,
  EQUILINK_STATUS_OUT_OF_RANGE = 13,
  EQUILINK_STATUS_PANIC = 14,
} EquilinkStatus;

typedef enum EquilinkOutcome {
  EQUILINK_OUTCOME_EQUAL = 0,
  EQUILINK_OUTCOME_ALICE_GREATER = 1,
  EQUILINK_OUTCOME_BOB_GREATER = 2,
} EquilinkOutcome;

// A Paillier key pair.
typedef struct EquilinkKeyPair EquilinkKeyPair;

// Matches and counters from a local linkage run.
typedef struct EquilinkLinkResult EquilinkLinkResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread, or null if none. The
// pointer stays valid until the next failing call on the same thread.
const char *equilink_last_error_message(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void equilink_string_free(char *s);

// Generates a key pair with a `bits`-bit modulus from the OS RNG.
//
// # Safety
// `out` must be a valid pointer.
enum EquilinkStatus equilink_keypair_generate(uint64_t bits, struct EquilinkKeyPair **out);

// Loads a key pair from the JSON private key file format.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum EquilinkStatus equilink_keypair_from_json(const char *json, struct EquilinkKeyPair **out);

// Writes the private key file JSON to `*out`.
//
// # Safety
// `keys` must be a live handle and `out` a valid pointer.
enum EquilinkStatus equilink_keypair_private_json(const struct EquilinkKeyPair *keys, char **out);

// Writes the public key file JSON (`bits`, `n`, `g`) to `*out`.
//
// # Safety
// `keys` must be a live handle and `out` a valid pointer.
enum EquilinkStatus equilink_keypair_public_json(const struct EquilinkKeyPair *keys, char **out);

// Modulus size in bits, or 0 for a null handle.
//
// # Safety
// `keys` must be null or a live handle.
uint64_t equilink_keypair_bits(const struct EquilinkKeyPair *keys);

// # Safety
// `keys` must be null or a handle that has not been freed.
void equilink_keypair_free(struct EquilinkKeyPair *keys);

// Runs the two-round equality protocol between two in-process parties
// holding `x` (Alice, owner of `keys`) and `y`.
//
// # Safety
// `keys` must be a live handle and `out` a valid pointer.
enum EquilinkStatus equilink_equality(const struct EquilinkKeyPair *keys,
                                      uint64_t x,
                                      uint64_t y,
                                      uint32_t width,
                                      enum EquilinkOutcome *out);

// Runs the greater-than protocol; `*out` is true iff `x > y`.
//
// # Safety
// `keys` must be a live handle and `out` a valid pointer.
enum EquilinkStatus equilink_greater_than(const struct EquilinkKeyPair *keys,
                                          uint64_t x,
                                          uint64_t y,
                                          uint32_t width,
                                          bool *out);

// HMAC-SHA256 of `field` under `key`, reduced into `[1, 2^width − 1]`.
//
// # Safety
// `key` and `field` must point to `key_len` and `field_len` readable bytes.
enum EquilinkStatus equilink_keyed_hash(const uint8_t *key,
                                        size_t key_len,
                                        const uint8_t *field,
                                        size_t field_len,
                                        uint32_t width,
                                        uint64_t *out);

// Links two lists of keyed-hash values between two in-process parties.
// `*_values[i]` is the hash of record `*_ids[i]`; the lists need not be
// sorted or distinct.
//
// # Safety
// Each value/id array must hold the stated number of elements and `out`
// must be a valid pointer.
enum EquilinkStatus equilink_link_local(const struct EquilinkKeyPair *keys,
                                        const uint64_t *alice_values,
                                        const uint64_t *alice_ids,
                                        size_t alice_len,
                                        const uint64_t *bob_values,
                                        const uint64_t *bob_ids,
                                        size_t bob_len,
                                        uint32_t width,
                                        struct EquilinkLinkResult **out);

// Number of matched `(alice id, bob id)` pairs; 0 for a null handle.
//
// # Safety
// `result` must be null or a live handle.
size_t equilink_link_result_match_count(const struct EquilinkLinkResult *result);

// Reads matched pair `index`.
//
// # Safety
// `result` must be a live handle; `alice_id` and `bob_id` valid pointers.
enum EquilinkStatus equilink_link_result_match(const struct EquilinkLinkResult *result,
                                               size_t index,
                                               uint64_t *alice_id,
                                               uint64_t *bob_id);

// Comparisons used by the merge; 0 for a null handle.
//
// # Safety
// `result` must be null or a live handle.
uint64_t equilink_link_result_comparisons(const struct EquilinkLinkResult *result);

// Whether the hash width leaves a non-negligible collision probability.
//
// # Safety
// `result` must be null or a live handle.
bool equilink_link_result_collisions_possible(const struct EquilinkLinkResult *result);

// # Safety
// `result` must be null or a handle that has not been freed.
void equilink_link_result_free(struct EquilinkLinkResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EQUILINK_H */
