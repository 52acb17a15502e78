/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef MOLQUDIT_H
#define MOLQUDIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum MqStatus {
  MQ_STATUS_OK = 0,
  MQ_STATUS_NULL_POINTER = 1,
  MQ_STATUS_INVALID_ARGUMENT = 2,
  MQ_STATUS_DATA = 3,
  MQ_STATUS_NUMERICAL = 4,
  MQ_STATUS_PLAN = 5,
  MQ_STATUS_IO = 6,
  MQ_STATUS_PANIC = 7,
} MqStatus;

typedef struct MqEngine MqEngine;

typedef struct MqMolecule MqMolecule;

typedef struct MqPlan MqPlan;

typedef struct MqSpectrum MqSpectrum;

// One eigenlevel. Energies in MHz, `mu` in MHz/G, `dedi` in MHz per kW/cm².
typedef struct MqLevel {
  double energy_mhz;
  double mu_mhz_per_g;
  double dedi_mhz_per_kw_cm2;
  uint32_t n;
  int32_t twice_mf;
} MqLevel;

typedef struct MqDeutschResult {
  double p_state2;
  // 1 when the verdict is "constant", 0 for "balanced".
  int32_t constant;
  // 1 when the verdict matches the oracle's function class.
  int32_t correct;
  size_t pulse_count;
  double total_time_s;
} MqDeutschResult;

typedef struct MqBudget {
  // Limiting coherence time, s; infinity when nothing limits it.
  double tau_d_s;
  double decoherence;
  double off_resonant;
  double frequency;
  double total;
} MqBudget;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread as an owned string, or
// NULL when no call has failed. Release with [`mq_string_free`].
char *mq_last_error(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void mq_string_free(char *s);

// Library version as a static NUL-terminated string.
const char *mq_version(void);

// Loads a builtin dataset (`caf`, `rbcs`) or a dataset file.
//
// # Safety
// `name_or_path` must be a NUL-terminated string; `out_mol` must be writable.
enum MqStatus mq_molecule_load(const char *name_or_path, struct MqMolecule **out_mol);

// # Safety
// `mol` must be NULL or a handle from [`mq_molecule_load`].
void mq_molecule_free(struct MqMolecule *mol);

// Species name as an owned string.
//
// # Safety
// `mol` must be a live handle; `out_name` must be writable.
enum MqStatus mq_molecule_name(const struct MqMolecule *mol, char **out_name);

// Builds the Hamiltonian operators up to rotational level `n_max`.
//
// # Safety
// `mol` must be a live handle; `out_engine` must be writable.
enum MqStatus mq_engine_new(const struct MqMolecule *mol,
                            uint32_t n_max,
                            struct MqEngine **out_engine);

// # Safety
// `engine` must be NULL or a handle from [`mq_engine_new`].
void mq_engine_free(struct MqEngine *engine);

// Diagonalizes at field `b_gauss`, intensity `intensity_kw_cm2` and trap
// polarization angle `beta_rad`, including μ and dE/dI.
//
// # Safety
// `engine` must be a live handle; `out_spectrum` must be writable.
enum MqStatus mq_spectrum_compute(const struct MqEngine *engine,
                                  double b_gauss,
                                  double intensity_kw_cm2,
                                  double beta_rad,
                                  struct MqSpectrum **out_spectrum);

// # Safety
// `spectrum` must be NULL or a handle from [`mq_spectrum_compute`].
void mq_spectrum_free(struct MqSpectrum *spectrum);

// Number of levels; 0 for a NULL handle.
//
// # Safety
// `spectrum` must be NULL or a live handle.
size_t mq_spectrum_len(const struct MqSpectrum *spectrum);

// Level `index` in energy order.
//
// # Safety
// `spectrum` must be a live handle; `out_level` must be writable.
enum MqStatus mq_spectrum_level(const struct MqSpectrum *spectrum,
                                size_t index,
                                struct MqLevel *out_level);

// Label of level `index` as an owned string.
//
// # Safety
// `spectrum` must be a live handle; `out_label` must be writable.
enum MqStatus mq_spectrum_label(const struct MqSpectrum *spectrum, size_t index, char **out_label);

// Index of the level with the given label.
//
// # Safety
// `spectrum` must be a live handle, `label` NUL-terminated and `out_index` writable.
enum MqStatus mq_spectrum_find(const struct MqSpectrum *spectrum,
                               const char *label,
                               size_t *out_index);

// Greedy qudit search. `spectrum` must come from `engine`.
//
// # Safety
// All handles must be live; `out_plan` must be writable.
enum MqStatus mq_plan_search(const struct MqEngine *engine,
                             const struct MqSpectrum *spectrum,
                             uint32_t primary_n,
                             uint32_t aux_n,
                             double t_half_pi_s,
                             double p_loss_max,
                             double purity,
                             double strength_min,
                             struct MqPlan **out_plan);

// Parses a plan from its JSON form.
//
// # Safety
// `json` must be NUL-terminated; `out_plan` must be writable.
enum MqStatus mq_plan_from_json(const char *json, struct MqPlan **out_plan);

// Serializes a plan to JSON as an owned string.
//
// # Safety
// `plan` must be a live handle; `out_json` must be writable.
enum MqStatus mq_plan_to_json(const struct MqPlan *plan, char **out_json);

// # Safety
// `plan` must be NULL or a plan handle.
void mq_plan_free(struct MqPlan *plan);

// Number of primary levels; 0 for a NULL handle.
//
// # Safety
// `plan` must be NULL or a live handle.
size_t mq_plan_dimension(const struct MqPlan *plan);

// Largest audited off-resonant loss; NaN for a NULL handle.
//
// # Safety
// `plan` must be NULL or a live handle.
double mq_plan_worst_loss(const struct MqPlan *plan);

// Runs Deutsch's algorithm with oracle 1..=4 on the first four primary levels.
//
// # Safety
// `plan` must be a live handle; `out_result` must be writable.
enum MqStatus mq_deutsch_run(const struct MqPlan *plan,
                             uint32_t oracle,
                             struct MqDeutschResult *out_result);

// Error budget of the Deutsch circuit for `oracle`. Negative noise
// arguments select the dataset defaults. `spectrum` must be computed at
// the plan's field point.
//
// # Safety
// All handles must be live; `out_budget` must be writable.
enum MqStatus mq_budget(const struct MqMolecule *mol,
                        const struct MqSpectrum *spectrum,
                        const struct MqPlan *plan,
                        uint32_t oracle,
                        double noise_b_gauss,
                        double noise_intensity_fraction,
                        double external_rate_hz,
                        struct MqBudget *out_budget);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOLQUDIT_H */
