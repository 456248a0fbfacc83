#ifndef QPARTITION_H
#define QPARTITION_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QpStatus {
  QP_STATUS_OK = 0,
  QP_STATUS_NULL_POINTER = 1,
  QP_STATUS_INVALID_INPUT = 2,
  QP_STATUS_CAP_EXCEEDED = 3,
  QP_STATUS_GUARANTEE_FAILED = 4,
  QP_STATUS_PARSE = 5,
  QP_STATUS_NUMERICAL = 6,
  QP_STATUS_PANIC = 7,
} QpStatus;

typedef enum QpMode {
  QP_MODE_PERFECT = 0,
  QP_MODE_WALK = 1,
} QpMode;

// Parsed Ising model with its enumerated energy table.
typedef struct QpModel QpModel;

// Exact per-level outcome distributions, ready to sample.
typedef struct QpQuantumPlan QpQuantumPlan;

typedef struct QpSchedule QpSchedule;

// Query counts of a planned quantum run.
typedef struct QpLedger {
  uint64_t controlled_walk;
  uint64_t controlled_reflections;
  uint64_t selective_phases;
  uint64_t samples_prepared;
} QpLedger;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread, or NULL. Owned by the
// library; valid until the next failing call.
const char *qp_last_error(void);

// Parses model text (`spins n`, `edge u v J`, `field u h` records).
//
// # Safety
// `text` must be a NUL-terminated string and `out` a writable pointer.
enum QpStatus qp_model_parse(const char *text, struct QpModel **out);

// # Safety
// `model` must come from [`qp_model_parse`] and not be used afterwards.
void qp_model_free(struct QpModel *model);

// Number of enumerated states, or 0 for a NULL handle.
//
// # Safety
// `model` must be NULL or a live handle.
uintptr_t qp_model_states(const struct QpModel *model);

// Exact `Z(β)` by enumeration.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum QpStatus qp_exact_partition(const struct QpModel *model, double beta, double *out);

// # Safety
// `model` must be a live handle and `out` writable.
enum QpStatus qp_schedule_build(const struct QpModel *model,
                                double beta_final,
                                double target_low,
                                double target_high,
                                struct QpSchedule **out);

// # Safety
// `schedule` must come from [`qp_schedule_build`] and not be used afterwards.
void qp_schedule_free(struct QpSchedule *schedule);

// Number of ratios `ℓ`, or 0 for a NULL handle.
//
// # Safety
// `schedule` must be NULL or a live handle.
uintptr_t qp_schedule_levels(const struct QpSchedule *schedule);

// Inverse temperature `index` in `0..=ℓ`.
//
// # Safety
// `schedule` must be a live handle and `out` writable.
enum QpStatus qp_schedule_beta(const struct QpSchedule *schedule, uintptr_t index, double *out);

// One run of the classical Markov-chain scheme.
//
// # Safety
// Handles must be live and `out` writable.
enum QpStatus qp_classical_estimate(const struct QpModel *model,
                                    const struct QpSchedule *schedule,
                                    double epsilon,
                                    uint64_t seed,
                                    double *out);

// Simulates the quantum scheme's circuits exactly; `amplitude_cap` of 0
// keeps the default cap.
//
// # Safety
// Handles must be live and `out` writable.
enum QpStatus qp_quantum_plan(const struct QpModel *model,
                              const struct QpSchedule *schedule,
                              double epsilon,
                              enum QpMode mode,
                              uintptr_t amplitude_cap,
                              struct QpQuantumPlan **out);

// # Safety
// `plan` must come from [`qp_quantum_plan`] and not be used afterwards.
void qp_quantum_plan_free(struct QpQuantumPlan *plan);

// Draws one estimate of `Z(β_F)` from a plan.
//
// # Safety
// `plan` must be a live handle and `out` writable.
enum QpStatus qp_quantum_run(const struct QpQuantumPlan *plan, uint64_t seed, double *out);

// Exact `Z(β_F)` stored in the plan.
//
// # Safety
// `plan` must be a live handle and `out` writable.
enum QpStatus qp_quantum_exact(const struct QpQuantumPlan *plan, double *out);

// Smallest probability, over levels, that one estimation lands within
// `(1 ± ε_pe)α_i`.
//
// # Safety
// `plan` must be a live handle and `out` writable.
enum QpStatus qp_quantum_min_band_mass(const struct QpQuantumPlan *plan, double *out);

// # Safety
// `plan` must be a live handle and `out` writable.
enum QpStatus qp_quantum_ledger(const struct QpQuantumPlan *plan, struct QpLedger *out);

// Phase gap `Δ` of the Szegedy walk for the Metropolis chain at `β`, and the
// chain's spectral gap `δ`. Returns `GuaranteeFailed` if `Δ < 2√δ`.
//
// # Safety
// `model` must be a live handle; outputs must be writable.
enum QpStatus qp_walk_gaps(const struct QpModel *model,
                           double beta,
                           double *phase_gap,
                           double *spectral_gap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QPARTITION_H */
