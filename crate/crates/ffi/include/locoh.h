/* Generated by cbindgen from locoh-ffi. Do not edit. */

#ifndef LOCOH_H
#define LOCOH_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum LocohStatus {
  LOCOH_STATUS_OK = 0,
  LOCOH_STATUS_NULL_POINTER = 1,
  LOCOH_STATUS_INVALID_ARGUMENT = 2,
  LOCOH_STATUS_DIMENSION_MISMATCH = 3,
  LOCOH_STATUS_INVALID_STATE = 4,
  LOCOH_STATUS_INVALID_BASIS = 5,
  LOCOH_STATUS_OVERFLOW = 6,
  LOCOH_STATUS_DEGENERATE = 7,
  LOCOH_STATUS_NON_COMMUTING = 8,
  LOCOH_STATUS_PANIC = 9,
} LocohStatus;

typedef enum LocohMeasure {
  LOCOH_MEASURE_C1 = 0,
  LOCOH_MEASURE_C2 = 1,
} LocohMeasure;

typedef enum LocohProtocol {
  LOCOH_PROTOCOL_TRACE_OUT = 0,
  LOCOH_PROTOCOL_NON_SELECTIVE = 1,
  LOCOH_PROTOCOL_POST_SELECTED = 2,
  /**
   * Coherence of the whole state in the product basis.
   */
  LOCOH_PROTOCOL_FULL = 3,
} LocohProtocol;

typedef enum LocohSampler {
  LOCOH_SAMPLER_GLOBAL_HAAR = 0,
  /**
   * Independent Haar unitaries on the system and the ancilla.
   */
  LOCOH_SAMPLER_FACTORIZED = 1,
} LocohSampler;

typedef enum LocohTopology {
  LOCOH_TOPOLOGY_CONTRACTIBLE = 0,
  LOCOH_TOPOLOGY_NON_CONTRACTIBLE_BOTH = 1,
  LOCOH_TOPOLOGY_NON_CONTRACTIBLE_H = 2,
  LOCOH_TOPOLOGY_NON_CONTRACTIBLE_V = 3,
} LocohTopology;

/**
 * Orthonormal basis of one subsystem.
 */
typedef struct LocohBasis LocohBasis;

/**
 * Density matrix together with its system/ancilla split.
 */
typedef struct LocohState LocohState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *locoh_version(void);

/**
 * Message of the last failed call on this thread, or NULL.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *locoh_last_error(void);

/**
 * Pure state `|ψ⟩⟨ψ|` from `dim` interleaved amplitudes.
 *
 * `dims` and `s_mask` have `n_factors` entries; `s_mask[k]` marks factor
 * `k` as part of the system.
 *
 * # Safety
 * All pointers must be valid for the stated lengths; `out` must be writable.
 */
enum LocohStatus locoh_state_from_pure(const double *amplitudes,
                                       size_t dim,
                                       const size_t *dims,
                                       const bool *s_mask,
                                       size_t n_factors,
                                       struct LocohState **out);

/**
 * Density matrix from `dim × dim` interleaved row-major entries.
 *
 * # Safety
 * As for [`locoh_state_from_pure`], with `entries` holding `2·dim²` doubles.
 */
enum LocohStatus locoh_state_from_matrix(const double *entries,
                                         size_t dim,
                                         const size_t *dims,
                                         const bool *s_mask,
                                         size_t n_factors,
                                         struct LocohState **out);

/**
 * Total Hilbert-space dimension of `state`, or 0 for NULL.
 *
 * # Safety
 * `state` must be NULL or a live handle.
 */
size_t locoh_state_dim(const struct LocohState *state);

/**
 * # Safety
 * `state` must be NULL or a handle not yet freed.
 */
void locoh_state_free(struct LocohState *state);

/**
 * # Safety
 * `out` must be writable.
 */
enum LocohStatus locoh_basis_computational(size_t dim, struct LocohBasis **out);

/**
 * # Safety
 * `out` must be writable.
 */
enum LocohStatus locoh_basis_fourier(size_t dim, struct LocohBasis **out);

/**
 * Basis whose vectors are the columns of a unitary given row-major.
 *
 * # Safety
 * `entries` must hold `2·dim²` doubles; `out` must be writable.
 */
enum LocohStatus locoh_basis_from_unitary(const double *entries,
                                          size_t dim,
                                          struct LocohBasis **out);

/**
 * # Safety
 * `basis` must be NULL or a handle not yet freed.
 */
void locoh_basis_free(struct LocohBasis *basis);

/**
 * Coherence of the whole state in `basis`, ignoring the bipartition.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum LocohStatus locoh_coherence(const struct LocohState *state,
                                 const struct LocohBasis *basis,
                                 enum LocohMeasure m,
                                 double *out);

/**
 * Localizable coherence of the system under `protocol`.
 *
 * `basis_s` acts on the system and `basis_a` on the ancilla.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum LocohStatus locoh_localizable(const struct LocohState *state,
                                   const struct LocohBasis *basis_s,
                                   const struct LocohBasis *basis_a,
                                   enum LocohProtocol protocol,
                                   enum LocohMeasure m,
                                   double *out);

/**
 * Seeded Monte Carlo mean and standard error of the `c2` protocol value
 * over random pure states on `d_s × d_a`, in computational bases.
 *
 * # Safety
 * `mean` and `stderr` must be writable.
 */
enum LocohStatus locoh_mc_estimate(enum LocohSampler sampler,
                                   enum LocohProtocol protocol,
                                   size_t d_s,
                                   size_t d_a,
                                   size_t samples,
                                   uint64_t seed,
                                   double *mean,
                                   double *stderr);

/**
 * Closed-form `c2` average matching [`locoh_mc_estimate`].
 *
 * The post-selected value is the exact global-Haar average. Trace-out is
 * not available for the factorized sampler.
 *
 * # Safety
 * `out` must be writable.
 */
enum LocohStatus locoh_analytic_average(enum LocohSampler sampler,
                                        enum LocohProtocol protocol,
                                        size_t d_s,
                                        size_t d_a,
                                        double *out);

/**
 * Simulated and predicted post-selected coherence of a toric-code ground
 * state on an `n × n` torus, system on the edges `s_edges`.
 *
 * `alpha` holds the four interleaved sector amplitudes ordered
 * `(0,0), (0,1), (1,0), (1,1)`.
 *
 * # Safety
 * `alpha` must hold 8 doubles, `s_edges` `n_edges` entries; outputs writable.
 */
enum LocohStatus locoh_toric_cave(size_t n,
                                  const double *alpha,
                                  const size_t *s_edges,
                                  size_t n_edges,
                                  enum LocohTopology topology,
                                  double *simulated,
                                  double *predicted);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOCOH_H */
