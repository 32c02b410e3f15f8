#ifndef PDSL_H
#define PDSL_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum PdslStatus {
  PDSL_STATUS_OK = 0,
  PDSL_STATUS_NULL_ARGUMENT = 1,
  PDSL_STATUS_INVALID_ARGUMENT = 2,
  PDSL_STATUS_IO = 3,
  PDSL_STATUS_PARSE = 4,
  PDSL_STATUS_SHAPE = 5,
  PDSL_STATUS_NON_FINITE = 6,
  PDSL_STATUS_MISMATCH = 7,
  PDSL_STATUS_SIMULATION = 8,
  PDSL_STATUS_PANIC = 99,
} PdslStatus;

/**
 * Diffusion mechanism selector.
 */
typedef enum PdslMechanism {
  PDSL_MECHANISM_SI = 0,
  PDSL_MECHANISM_SIR = 1,
  PDSL_MECHANISM_GLT = 2,
} PdslMechanism;

/**
 * Training optimizer selector.
 */
typedef enum PdslOptimizer {
  PDSL_OPTIMIZER_ADAM = 0,
  /**
   * Plain gradient descent.
   */
  PDSL_OPTIMIZER_SGD = 1,
} PdslOptimizer;

/**
 * A simulated train/test cascade dataset.
 */
typedef struct PdslDataset PdslDataset;

/**
 * A weighted graph.
 */
typedef struct PdslGraph PdslGraph;

/**
 * A trained model.
 */
typedef struct PdslModel PdslModel;

/**
 * Model hyperparameters accepted over the C boundary.
 */
typedef struct PdslModelConfig {
  size_t latent_dim;
  size_t hidden;
  size_t prop_dim;
  size_t gcn_layers;
  size_t rk4_steps;
  size_t readout_hidden;
  double l2;
  double lr;
  size_t epochs;
  size_t snapshot_inputs;
  enum PdslOptimizer optimizer;
} PdslModelConfig;

/**
 * Two-class macro scores of one prediction.
 */
typedef struct PdslScores {
  double precision;
  double recall;
  double f1;
  double accuracy;
} PdslScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *pdsl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pdsl_version(void);

/**
 * Weighted Barabási–Albert graph with `n` nodes and attachment `m`.
 *
 * # Safety
 * `out` must be a valid pointer to write a handle into.
 */
enum PdslStatus pdsl_graph_barabasi_albert(size_t n,
                                           size_t m,
                                           uint64_t seed,
                                           struct PdslGraph **out);

/**
 * Load an edge list; weights are drawn from `seed` when the file has none.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PdslStatus pdsl_graph_load(const char *path,
                                bool directed,
                                uint64_t seed,
                                struct PdslGraph **out);

/**
 * # Safety
 * `graph` must be null or a handle from this library.
 */
size_t pdsl_graph_node_count(const struct PdslGraph *graph);

/**
 * # Safety
 * `graph` must be null or a handle from this library.
 */
size_t pdsl_graph_edge_count(const struct PdslGraph *graph);

/**
 * # Safety
 * `graph` must be null or a handle from this library, not used afterwards.
 */
void pdsl_graph_free(struct PdslGraph *graph);

/**
 * Simulate `count` valid cascades (80/20 split) on `graph`.
 *
 * # Safety
 * `graph` must be a live handle and `out` a valid pointer.
 */
enum PdslStatus pdsl_dataset_simulate(const struct PdslGraph *graph,
                                      enum PdslMechanism mechanism,
                                      double source_ratio,
                                      size_t snapshots,
                                      size_t count,
                                      uint64_t seed,
                                      struct PdslDataset **out);

/**
 * # Safety
 * `path` must be NUL-terminated and `out` a valid pointer.
 */
enum PdslStatus pdsl_dataset_load(const char *path, struct PdslDataset **out);

/**
 * # Safety
 * `dataset` must be a live handle and `path` NUL-terminated.
 */
enum PdslStatus pdsl_dataset_save(const struct PdslDataset *dataset, const char *path);

/**
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t pdsl_dataset_train_count(const struct PdslDataset *dataset);

/**
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t pdsl_dataset_test_count(const struct PdslDataset *dataset);

/**
 * Copy the source indicator (0/1) of test cascade `index` into `out[0..n]`.
 *
 * # Safety
 * `dataset` must be a live handle and `out` must hold `n` bytes.
 */
enum PdslStatus pdsl_dataset_test_sources(const struct PdslDataset *dataset,
                                          size_t index,
                                          uint8_t *out,
                                          size_t n);

/**
 * # Safety
 * `dataset` must be null or a live handle, not used afterwards.
 */
void pdsl_dataset_free(struct PdslDataset *dataset);

/**
 * Library defaults, to be adjusted before [`pdsl_model_train`].
 */
struct PdslModelConfig pdsl_model_config_default(void);

/**
 * Train a model on the dataset's training split. `losses`, when non-null,
 * receives up to `losses_len` per-epoch mean losses.
 *
 * # Safety
 * Handles must be live; `out` valid; `losses` null or holding `losses_len` doubles.
 */
enum PdslStatus pdsl_model_train(const struct PdslGraph *graph,
                                 const struct PdslDataset *dataset,
                                 const struct PdslModelConfig *config,
                                 uint64_t seed,
                                 double *losses,
                                 size_t losses_len,
                                 struct PdslModel **out);

/**
 * # Safety
 * `model` must be a live handle and `path` NUL-terminated.
 */
enum PdslStatus pdsl_model_save(const struct PdslModel *model, const char *path);

/**
 * Load a checkpoint, checking it against a graph of `node_count` nodes.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` valid.
 */
enum PdslStatus pdsl_model_load(const char *path, size_t node_count, struct PdslModel **out);

/**
 * # Safety
 * `model` must be null or a live handle, not used afterwards.
 */
void pdsl_model_free(struct PdslModel *model);

/**
 * Localize the sources of test cascade `index`: writes refined source
 * probabilities to `probs[0..n]` and the 0.5-thresholded prediction to
 * `prediction[0..n]` (either may be null). `refine_epochs` < 0 uses the default.
 *
 * # Safety
 * Handles must be live; non-null buffers must hold `n` elements.
 */
enum PdslStatus pdsl_infer_test_cascade(const struct PdslModel *model,
                                        const struct PdslGraph *graph,
                                        const struct PdslDataset *dataset,
                                        size_t index,
                                        int32_t refine_epochs,
                                        double *probs,
                                        uint8_t *prediction,
                                        size_t n,
                                        size_t *matched_block);

/**
 * Macro precision/recall/F1 and accuracy of 0/1 vectors of length `n`.
 *
 * # Safety
 * `truth` and `pred` must hold `n` bytes; `out` must be valid.
 */
enum PdslStatus pdsl_macro_scores(const uint8_t *truth,
                                  const uint8_t *pred,
                                  size_t n,
                                  struct PdslScores *out);

/**
 * Average Error Distance of the top-`k` entries of `probs` against `truth[0..k]`.
 *
 * # Safety
 * `graph` must be live; `truth` must hold `k` ids, `probs` the node count; `out` valid.
 */
enum PdslStatus pdsl_aed(const struct PdslGraph *graph,
                         const size_t *truth,
                         size_t k,
                         const double *probs,
                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PDSL_H */
