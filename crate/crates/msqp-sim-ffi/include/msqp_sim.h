#ifndef MSQP_SIM_H
#define MSQP_SIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of any fallible call.
typedef enum MsqpStatus {
  MSQP_STATUS_OK = 0,
  // A required pointer was NULL.
  MSQP_STATUS_NULL_ARGUMENT = 1,
  // A value was out of range or inconsistent with the handle.
  MSQP_STATUS_INVALID_ARGUMENT = 2,
  // No coprime root exists for the requested length.
  MSQP_STATUS_NO_VALID_ROOT = 3,
  // The experiment config failed validation.
  MSQP_STATUS_CONFIG_REJECTED = 4,
  // File or stream I/O failed.
  MSQP_STATUS_IO_FAILED = 5,
  // An output buffer was too small.
  MSQP_STATUS_BUFFER_TOO_SMALL = 6,
  // A string was not valid UTF-8.
  MSQP_STATUS_BAD_ENCODING = 7,
} MsqpStatus;

// An immutable complex sample buffer.
typedef struct MsqpSequence MsqpSequence;

// Composite-waveform description: subband sequences, guard gaps, and the
// phase rotations applied when building.
typedef struct MsqpSpec MsqpSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message from the most recent failure on this thread, or an empty string.
// The pointer stays valid until the next failing call on the same thread.
const char *msqp_last_error(void);

// Picks the sidelobe-confining root for an odd length.
//
// # Safety
// `out_root` must point to writable memory for one `usize`.
enum MsqpStatus msqp_root_design(size_t length, size_t *out_root);

// Creates a spec with `subband_count` equal-length subbands on designed
// roots. Free with [`msqp_spec_free`].
//
// # Safety
// `out_spec` must point to writable memory for one pointer.
enum MsqpStatus msqp_spec_new(size_t subband_count,
                              size_t subband_len,
                              size_t guard_len,
                              struct MsqpSpec **out_spec);

// Releases a spec. NULL is ignored.
//
// # Safety
// `spec` must be a pointer from [`msqp_spec_new`] that has not been freed.
void msqp_spec_free(struct MsqpSpec *spec);

// Fixes the per-subband build phases. `count` must equal the subband
// count and every value must come from the spec's phase alphabet; passing
// NULL with `count == 0` clears them back to zero rotations.
//
// # Safety
// `spec` must be a live handle from [`msqp_spec_new`]. Unless NULL,
// `phases` must point to `count` readable doubles.
enum MsqpStatus msqp_spec_set_phases(struct MsqpSpec *spec, const double *phases, size_t count);

// Searches the phase alphabet for the lowest-peak composite and stores
// the winning phases on the spec. A non-NULL `alphabet` of `alphabet_len`
// radians in [0, 2pi) replaces the alphabet first; NULL keeps the current
// one. On success `out_papr_db`, if non-NULL, receives the achieved
// peak-to-average ratio in dB.
//
// # Safety
// `spec` must be a live handle from [`msqp_spec_new`]. Unless NULL,
// `alphabet` must point to `alphabet_len` readable doubles and
// `out_papr_db` to one writable double.
enum MsqpStatus msqp_spec_search_phases(struct MsqpSpec *spec,
                                        const double *alphabet,
                                        size_t alphabet_len,
                                        double *out_papr_db);

// Builds the composite sequence the spec describes. Free the result with
// [`msqp_sequence_free`].
//
// # Safety
// `spec` must be a live handle from [`msqp_spec_new`]; `out_sequence`
// must point to writable memory for one pointer.
enum MsqpStatus msqp_spec_build(const struct MsqpSpec *spec, struct MsqpSequence **out_sequence);

// Generates one constant-amplitude sequence of odd `length`. `root == 0`
// selects the designed root; any other value is used as given. Free the
// result with [`msqp_sequence_free`].
//
// # Safety
// `out_sequence` must point to writable memory for one pointer.
enum MsqpStatus msqp_zc_sequence(size_t length, size_t root, struct MsqpSequence **out_sequence);

// Sample count of a sequence; 0 for NULL.
//
// # Safety
// `sequence` must be NULL or a live handle from this library.
size_t msqp_sequence_len(const struct MsqpSequence *sequence);

// Copies the samples out as interleaved doubles. `capacity` counts
// doubles, so it must be at least twice the sample count.
//
// # Safety
// `sequence` must be a live handle from this library; `out_interleaved`
// must point to `capacity` writable doubles.
enum MsqpStatus msqp_sequence_copy(const struct MsqpSequence *sequence,
                                   double *out_interleaved,
                                   size_t capacity);

// Peak-to-average power ratio of a sequence in dB.
//
// # Safety
// `sequence` must be a live handle from this library; `out_db` must point
// to one writable double.
enum MsqpStatus msqp_sequence_papr_db(const struct MsqpSequence *sequence, double *out_db);

// Releases a sequence. NULL is ignored.
//
// # Safety
// `sequence` must be a pointer returned by this library that has not
// been freed.
void msqp_sequence_free(struct MsqpSequence *sequence);

// Parses a TOML experiment config, runs its scenario, and returns the
// result table as a CSV string allocated by this library. `seed` and
// `trials` override the config when non-NULL. Free the string with
// [`msqp_string_free`].
//
// # Safety
// `config_toml` must be a NUL-terminated string; `out_csv` must point to
// writable memory for one pointer. Unless NULL, `seed` and `trials` must
// each point to one readable `uint64_t`.
enum MsqpStatus msqp_run_config_toml(const char *config_toml,
                                     const uint64_t *seed,
                                     const uint64_t *trials,
                                     char **out_csv);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must be a pointer returned by this library that has not been freed.
void msqp_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MSQP_SIM_H */
