/* C interface for the recognizability-index library.
 *
 * Conventions:
 *   - Every fallible call returns a recidx_status; RECIDX_OK means success.
 *   - On failure, recidx_last_error() returns a thread-local diagnostic that
 *     stays valid until the next library call on the same thread.
 *   - Strings handed out through char** are owned by the caller and must be
 *     released with recidx_string_free().
 *   - Objects handed out through recidx_*** are released with the matching
 *     recidx_*_free(); all free functions accept NULL.
 */
#ifndef RECIDX_H
#define RECIDX_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum recidx_status {
  RECIDX_OK = 0,
  RECIDX_E_USAGE = 2,   /* bad arguments or config */
  RECIDX_E_DATA = 3,    /* malformed or inconsistent input files */
  RECIDX_E_NUMERIC = 4, /* numerical failure (divergence, degenerate input) */
  RECIDX_E_INTERNAL = 5 /* unexpected internal failure */
} recidx_status;

typedef struct recidx_dataset recidx_dataset;
typedef struct recidx_model recidx_model;
typedef struct recidx_report recidx_report;

const char* recidx_version(void);
const char* recidx_last_error(void);
void recidx_string_free(char* s);

/* xi = d_ui * d_neg / (d_pos + epsilon); epsilon must be > 0. */
recidx_status recidx_recognizability_index(double d_pos, double d_neg, double d_ui,
                                           double epsilon, double* out_xi);

/* config_json holds a {"synth": {...}} document. */
recidx_status recidx_dataset_generate(const char* config_json, recidx_dataset** out_dataset);
/* split is one of "train", "gallery", "probe", "ui". */
recidx_status recidx_dataset_write_split(const recidx_dataset* dataset, const char* split,
                                         const char* path);
/* Per-split and per-hardness counts as a JSON document. */
recidx_status recidx_dataset_summary(const recidx_dataset* dataset, char** out_json);
void recidx_dataset_free(recidx_dataset* dataset);

/* config_json holds a {"train": {...}} document; out_history_csv (optional)
 * receives the per-epoch history table. */
recidx_status recidx_train(const char* config_json, recidx_model** out_model,
                           char** out_history_csv);
recidx_status recidx_model_save(const recidx_model* model, const char* path);
recidx_status recidx_model_load(const char* path, recidx_model** out_model);
void recidx_model_free(recidx_model* model);

/* Reads an embedding CSV (header id,label,x0..x{d-1}) and writes a score CSV
 * with header id,label,xi_hat. */
recidx_status recidx_score_csv(const recidx_model* model, const char* input_csv,
                               const char* output_csv);

/* Runs the evaluation protocol. distractors_csv may be NULL; its rows are
 * added to the probe set as unmated searches. options_json may be NULL or an
 * object with any of: metrics (array of "rank1"|"verification"|"openset"|"erc"),
 * far_grid, fpir_grid, reject_grid, fmr, rank, max_mated_pairs,
 * max_nonmated_pairs, seed. */
recidx_status recidx_eval(const recidx_model* model, const char* gallery_csv,
                          const char* probe_csv, const char* distractors_csv,
                          const char* options_json, recidx_report** out_report);
recidx_status recidx_report_json(const recidx_report* report, char** out_json);
recidx_status recidx_report_erc_csv(const recidx_report* report, const char* path);
void recidx_report_free(recidx_report* report);

#ifdef __cplusplus
}
#endif

#endif /* RECIDX_H */
