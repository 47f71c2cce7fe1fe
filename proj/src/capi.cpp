#include "gloss.h"

#include <exception>
#include <string>

#include "core/common.hpp"
#include "core/pipeline.hpp"
#include "core/tensorstore.hpp"

namespace {

thread_local std::string g_last_error = "";

template <typename F>
gloss_status guarded(F&& fn) {
    try {
        fn();
        g_last_error.clear();
        return GLOSS_OK;
    } catch (const gloss::Error& e) {
        g_last_error = e.what();
        return static_cast<gloss_status>(e.code);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return GLOSS_ERR_DATA;
    }
}

const gloss::TensorMap& unwrap(const gloss_model* m) {
    if (!m) gloss::fail(gloss::ERR_CONFIG, "null model handle");
    return *reinterpret_cast<const gloss::TensorMap*>(m);
}

std::string str_or_empty(const char* s) { return s ? s : ""; }

}  // namespace

extern "C" {

const char* gloss_last_error(void) { return g_last_error.c_str(); }

gloss_status gloss_model_open(const char* path, gloss_model** out) {
    return guarded([&] {
        if (!path || !out) gloss::fail(gloss::ERR_CONFIG, "null argument");
        auto* map = new gloss::TensorMap(gloss::load_checkpoint(path));
        *out = reinterpret_cast<gloss_model*>(map);
    });
}

void gloss_model_close(gloss_model* model) {
    delete reinterpret_cast<gloss::TensorMap*>(model);
}

gloss_status gloss_model_save(const gloss_model* model, const char* path) {
    return guarded([&] {
        if (!path) gloss::fail(gloss::ERR_CONFIG, "null path");
        gloss::save_checkpoint(unwrap(model), path);
    });
}

gloss_status gloss_model_config(const gloss_model* model, int64_t out[6]) {
    return guarded([&] {
        const auto& cfg = unwrap(model).config;
        out[0] = cfg.n_layers;
        out[1] = cfg.d_model;
        out[2] = cfg.d_ff;
        out[3] = cfg.vocab_size;
        out[4] = cfg.n_heads;
        out[5] = cfg.max_seq;
    });
}

gloss_status gloss_fixture_gen(int64_t n_layers, int64_t d_model, int64_t d_ff, int64_t vocab,
                               int64_t n_bad, uint64_t seed, const char* out_dir) {
    return guarded([&] {
        gloss::run_fixture_gen(n_layers, d_model, d_ff, vocab, n_bad, seed, str_or_empty(out_dir));
    });
}

gloss_status gloss_extract(const gloss_model* model, const char* pairs_path,
                           const char* badwords_path, int64_t k, int64_t m,
                           int32_t last_token_only, const char* out_candidates_json) {
    return guarded([&] {
        gloss::ExtractParams params{k, m, last_token_only != 0};
        gloss::run_extract(unwrap(model), str_or_empty(pairs_path), str_or_empty(badwords_path),
                           params, str_or_empty(out_candidates_json));
    });
}

gloss_status gloss_subspace(const gloss_model* model, const char* candidates_json,
                            const char* badwords_path, double alpha_sel, double eta,
                            int32_t center_pca, const char* out_subspace_json) {
    return guarded([&] {
        gloss::SubspaceParams params{alpha_sel, eta, center_pca != 0};
        gloss::run_subspace(unwrap(model), str_or_empty(candidates_json),
                            str_or_empty(badwords_path), params, str_or_empty(out_subspace_json));
    });
}

gloss_status gloss_apply(const gloss_model* model, const char* subspace_json,
                         int64_t layer_start, int64_t layer_end, const char* out_checkpoint) {
    return guarded([&] {
        gloss::run_apply(unwrap(model), str_or_empty(subspace_json), layer_start, layer_end,
                         str_or_empty(out_checkpoint));
    });
}

gloss_status gloss_control(const gloss_model* model, const char* subspace_json, uint64_t seed,
                           int64_t layer_start, int64_t layer_end, const char* out_checkpoint) {
    return guarded([&] {
        gloss::run_control(unwrap(model), str_or_empty(subspace_json), seed, layer_start,
                           layer_end, str_or_empty(out_checkpoint));
    });
}

gloss_status gloss_eval(const gloss_model* model, const char* prompts_path,
                        const char* badwords_path, const char* ppl_corpus_path, int64_t steps,
                        const char* out_report_json) {
    return guarded([&] {
        gloss::run_eval(unwrap(model), str_or_empty(prompts_path), str_or_empty(badwords_path),
                        str_or_empty(ppl_corpus_path), steps, str_or_empty(out_report_json));
    });
}

gloss_status gloss_intervene(const gloss_model* model, const char* pairs_path,
                             const char* prompts_path, const char* badwords_path,
                             const char* mode, int64_t probe_layer, int64_t pool, double factor,
                             const double* xs, size_t n_xs, int64_t steps, const char* out_csv) {
    return guarded([&] {
        gloss::InterveneParams params;
        params.mode = str_or_empty(mode);
        params.probe_layer = probe_layer;
        params.pool = pool;
        params.factor = factor;
        if (xs && n_xs) params.xs.assign(xs, xs + n_xs);
        params.steps = steps;
        gloss::run_intervene(unwrap(model), str_or_empty(pairs_path), str_or_empty(prompts_path),
                             str_or_empty(badwords_path), params, str_or_empty(out_csv));
    });
}

gloss_status gloss_shift(const gloss_model* model, const char* subspace_json,
                         const char* corpus_path, const char* badwords_path, int64_t layer,
                         int64_t component, int64_t m, const double* alphas, size_t n_alphas,
                         const char* out_json) {
    return guarded([&] {
        gloss::ShiftParams params;
        params.layer = layer;
        params.component = component;
        params.m = m;
        if (alphas && n_alphas) params.alphas.assign(alphas, alphas + n_alphas);
        gloss::run_shift(unwrap(model), str_or_empty(subspace_json), str_or_empty(corpus_path),
                         str_or_empty(badwords_path), params, str_or_empty(out_json));
    });
}

gloss_status gloss_sweep_l0(const gloss_model* model, const char* subspace_json,
                            const char* prompts_path, const char* corpus_path,
                            const char* badwords_path, int64_t steps, const char* out_csv) {
    return guarded([&] {
        gloss::run_sweep_l0(unwrap(model), str_or_empty(subspace_json), str_or_empty(prompts_path),
                            str_or_empty(corpus_path), str_or_empty(badwords_path), steps,
                            str_or_empty(out_csv));
    });
}

}  // extern "C"
