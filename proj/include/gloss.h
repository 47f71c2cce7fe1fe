/* gloss — global toxic subspace surgery for small decoder-only transformers.
 *
 * C API over the C++ core: opaque handles, integer status codes, and a
 * thread-local error message. All pipeline stages operate on files and write
 * a `<output>.manifest.json` next to each output for reproducibility.
 *
 * Status codes: 0 success, 2 config error, 3 data error, 4 numeric
 * degeneracy.
 */
#ifndef GLOSS_H
#define GLOSS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct gloss_model_s gloss_model;
typedef int32_t gloss_status;

#define GLOSS_OK 0
#define GLOSS_ERR_CONFIG 2
#define GLOSS_ERR_DATA 3
#define GLOSS_ERR_NUMERIC 4

/* Message for the last failing call on this thread. Never NULL. */
const char* gloss_last_error(void);

/* ---- checkpoints ---- */

gloss_status gloss_model_open(const char* path, gloss_model** out);
void gloss_model_close(gloss_model* model);
gloss_status gloss_model_save(const gloss_model* model, const char* path);

/* out: n_layers, d_model, d_ff, vocab_size, n_heads, max_seq */
gloss_status gloss_model_config(const gloss_model* model, int64_t out[6]);

/* ---- pipeline stages ---- */

gloss_status gloss_fixture_gen(int64_t n_layers, int64_t d_model, int64_t d_ff, int64_t vocab,
                               int64_t n_bad, uint64_t seed, const char* out_dir);

gloss_status gloss_extract(const gloss_model* model, const char* pairs_path,
                           const char* badwords_path, int64_t k, int64_t m,
                           int32_t last_token_only, const char* out_candidates_json);

gloss_status gloss_subspace(const gloss_model* model, const char* candidates_json,
                            const char* badwords_path, double alpha_sel, double eta,
                            int32_t center_pca, const char* out_subspace_json);

/* layer_start/layer_end < 0 pick the defaults (ceil(L/2) and L-1). */
gloss_status gloss_apply(const gloss_model* model, const char* subspace_json,
                         int64_t layer_start, int64_t layer_end, const char* out_checkpoint);

gloss_status gloss_control(const gloss_model* model, const char* subspace_json, uint64_t seed,
                           int64_t layer_start, int64_t layer_end, const char* out_checkpoint);

/* ppl_corpus_path may be NULL or empty to skip perplexity. */
gloss_status gloss_eval(const gloss_model* model, const char* prompts_path,
                        const char* badwords_path, const char* ppl_corpus_path, int64_t steps,
                        const char* out_report_json);

/* mode: "enhance" | "suppress" | "reverse". xs are counts (enhance) or
 * proportions (suppress); ignored for reverse. probe_layer < 0 picks L/2. */
gloss_status gloss_intervene(const gloss_model* model, const char* pairs_path,
                             const char* prompts_path, const char* badwords_path,
                             const char* mode, int64_t probe_layer, int64_t pool, double factor,
                             const double* xs, size_t n_xs, int64_t steps, const char* out_csv);

gloss_status gloss_shift(const gloss_model* model, const char* subspace_json,
                         const char* corpus_path, const char* badwords_path, int64_t layer,
                         int64_t component, int64_t m, const double* alphas, size_t n_alphas,
                         const char* out_json);

gloss_status gloss_sweep_l0(const gloss_model* model, const char* subspace_json,
                            const char* prompts_path, const char* corpus_path,
                            const char* badwords_path, int64_t steps, const char* out_csv);

#ifdef __cplusplus
}
#endif

#endif /* GLOSS_H */
