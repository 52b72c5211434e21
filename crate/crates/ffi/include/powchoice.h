#ifndef POWCHOICE_H
#define POWCHOICE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum PcStatus {
  PC_STATUS_OK = 0,
  PC_STATUS_NULL_POINTER = 1,
  PC_STATUS_INVALID_ARGUMENT = 2,
  PC_STATUS_BUFFER_TOO_SMALL = 3,
  PC_STATUS_DIVERGENCE = 4,
  PC_STATUS_UNSUPPORTED = 5,
  PC_STATUS_FINISHED = 6,
  PC_STATUS_INTERNAL = 7,
  PC_STATUS_PANIC = 8,
} PcStatus;

typedef enum PcStrategy {
  PC_STRATEGY_RAND = 0,
  PC_STRATEGY_POW_D = 1,
  PC_STRATEGY_CPOW_D = 2,
  PC_STRATEGY_RPOW_D = 3,
} PcStrategy;

// Opaque objective handle.
typedef struct PcTask PcTask;

// Opaque training run handle.
typedef struct PcTrainer PcTrainer;

// Options for [`pc_trainer_new`]. Obtain defaults from
// [`pc_run_options_default`].
typedef struct PcRunOptions {
  enum PcStrategy strategy;
  // Clients per round.
  size_t m;
  // Candidate set size for the pow-d variants.
  size_t d;
  // `rand` only: sample with replacement.
  bool replacement;
  // `cpow-d` only: mini-batch size for loss estimates.
  size_t estimate_batch;
  size_t local_steps;
  size_t rounds;
  size_t batch_size;
  // Fixed learning rate.
  double eta;
  uint64_t seed;
} PcRunOptions;

typedef struct PcBoundInputs {
  double l;
  double mu;
  double g;
  double sigma;
  size_t tau;
  size_t m;
  double gamma_gap;
  double rho_bar;
  double rho_tilde;
  double init_dist_sq;
  // `F(w0) - F*`; a negative value means unknown.
  double init_excess;
} PcBoundInputs;

typedef struct PcBoundTerms {
  double vanishing;
  double bias;
  double total;
} PcBoundTerms;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *pc_last_error_message(void);

// Quadratic task with `clients` clients in dimension `dim`.
//
// # Safety
// `out` must be a valid pointer.
enum PcStatus pc_quadratic_new(size_t clients,
                               size_t dim,
                               double power_law_a,
                               uint64_t seed,
                               struct PcTask **out);

// Logistic regression on a generated Synthetic(alpha, beta) dataset.
//
// # Safety
// `out` must be a valid pointer.
enum PcStatus pc_synthetic_new(double alpha,
                               double beta,
                               size_t clients,
                               double power_law_a,
                               uint64_t seed,
                               struct PcTask **out);

// # Safety
// `task` must come from a `pc_*_new` call and not be freed already.
void pc_task_free(struct PcTask *task);

// Number of clients, or 0 for a null handle.
//
// # Safety
// `task` must be null or a live handle.
size_t pc_task_num_clients(const struct PcTask *task);

// Model dimension, or 0 for a null handle.
//
// # Safety
// `task` must be null or a live handle.
size_t pc_task_dim(const struct PcTask *task);

// Copies the data fractions `p_k` into `out`.
//
// # Safety
// `task` must be a live handle; `out` must hold `len` doubles.
enum PcStatus pc_task_fractions(const struct PcTask *task, double *out, size_t len);

// `F(w)`.
//
// # Safety
// `task` must be a live handle; `w` must hold `len` doubles; `out` must be
// valid.
enum PcStatus pc_task_global_loss(const struct PcTask *task,
                                  const double *w,
                                  size_t len,
                                  double *out);

// `F_k(w)`.
//
// # Safety
// As for [`pc_task_global_loss`].
enum PcStatus pc_task_local_loss(const struct PcTask *task,
                                 size_t k,
                                 const double *w,
                                 size_t len,
                                 double *out);

// Defaults: `rand` with replacement, `m = 1`, one local step, batch 1,
// 100 rounds, `eta = 0.01`, seed 0.
struct PcRunOptions pc_run_options_default(void);

// Starts a training run from the zero model.
//
// # Safety
// `task` must be a live handle that outlives the trainer; `options` and
// `out` must be valid.
enum PcStatus pc_trainer_new(const struct PcTask *task,
                             const struct PcRunOptions *options,
                             struct PcTrainer **out);

// # Safety
// `trainer` must come from [`pc_trainer_new`] and not be freed already.
void pc_trainer_free(struct PcTrainer *trainer);

// Runs one communication round and stores the post-round global loss in
// `loss` (may be null). Returns `PC_STATUS_FINISHED` once every round has
// run.
//
// # Safety
// `trainer` must be a live handle; `loss` must be null or valid.
enum PcStatus pc_trainer_step(struct PcTrainer *trainer, double *loss);

// Completed rounds, or 0 for a null handle.
//
// # Safety
// `trainer` must be null or a live handle.
size_t pc_trainer_round(const struct PcTrainer *trainer);

// Copies the current global model into `out`.
//
// # Safety
// `trainer` must be a live handle; `out` must hold `len` doubles.
enum PcStatus pc_trainer_model(const struct PcTrainer *trainer, double *out, size_t len);

// Decaying learning rate bound after `t` iterations.
//
// # Safety
// `inputs` and `out` must be valid.
enum PcStatus pc_bound_decaying(const struct PcBoundInputs *inputs,
                                uint64_t t,
                                struct PcBoundTerms *out);

// Fixed learning rate bound after `t` iterations; `eta` must not exceed
// [`pc_bound_fixed_rate_cap`].
//
// # Safety
// `inputs` and `out` must be valid.
enum PcStatus pc_bound_fixed(const struct PcBoundInputs *inputs,
                             double eta,
                             uint64_t t,
                             struct PcBoundTerms *out);

// Largest learning rate the fixed-rate bound admits, or NaN for null.
//
// # Safety
// `inputs` must be null or valid.
double pc_bound_fixed_rate_cap(const struct PcBoundInputs *inputs);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POWCHOICE_H */
