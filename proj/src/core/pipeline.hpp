#pragma once

#include "eval.hpp"
#include "fixture.hpp"
#include "interventions.hpp"
#include "surgery.hpp"

namespace gloss {

// Path-level pipeline stages backing the C API and the CLI. Every stage
// writes `<output>.manifest.json` (config hash, input hashes, output hash)
// so a run is byte-reproducible from its manifest.

struct ExtractParams {
    int64_t k = 10;         // candidates per layer
    int64_t m = 100;        // top-m tokens for tox_score
    bool last_token_only = false;
};

void run_extract(const TensorMap& model, const std::string& pairs_path,
                 const std::string& badwords_path, const ExtractParams& params,
                 const std::string& out_candidates_json);

struct SubspaceParams {
    double alpha_sel = 1.0;
    double eta = 0.8;
    bool center_pca = false;
};

void run_subspace(const TensorMap& model, const std::string& candidates_json,
                  const std::string& badwords_path, const SubspaceParams& params,
                  const std::string& out_subspace_json);

void run_apply(const TensorMap& model, const std::string& subspace_json, int64_t layer_start,
               int64_t layer_end, const std::string& out_checkpoint);

void run_control(const TensorMap& model, const std::string& subspace_json, uint64_t seed,
                 int64_t layer_start, int64_t layer_end, const std::string& out_checkpoint);

void run_eval(const TensorMap& model, const std::string& prompts_path,
              const std::string& badwords_path, const std::string& ppl_corpus_path,
              int64_t steps, const std::string& out_report_json);

struct InterveneParams {
    std::string mode;            // "enhance" | "suppress" | "reverse"
    int64_t probe_layer = -1;    // -1: first planted-style middle layer L/2
    int64_t pool = 20;           // ranked toxic-vector list size
    double factor = 10.0;
    std::vector<double> xs;      // counts (enhance) or proportions (suppress)
    int64_t steps = 10;
};

// CSV: mode,x,badword_mass sweep over the requested intervention strengths.
void run_intervene(const TensorMap& model, const std::string& pairs_path,
                   const std::string& prompts_path, const std::string& badwords_path,
                   const InterveneParams& params, const std::string& out_csv);

struct ShiftParams {
    int64_t layer = 0;         // layer for the mean activation
    int64_t component = 0;     // subspace basis row used as direction
    int64_t m = 10;
    std::vector<double> alphas;
};

// JSON token table per alpha, with the bad-token fraction of each top-m list.
void run_shift(const TensorMap& model, const std::string& subspace_json,
               const std::string& corpus_path, const std::string& badwords_path,
               const ShiftParams& params, const std::string& out_json);

// CSV: l0,badword_mass,perplexity for every start layer.
void run_sweep_l0(const TensorMap& model, const std::string& subspace_json,
                  const std::string& prompts_path, const std::string& corpus_path,
                  const std::string& badwords_path, int64_t steps, const std::string& out_csv);

void run_fixture_gen(int64_t n_layers, int64_t d_model, int64_t d_ff, int64_t vocab,
                     int64_t n_bad, uint64_t seed, const std::string& out_dir);

// candidates JSON round trip (extract output / subspace input)
void save_candidates(const std::vector<DirectionCandidate>& cands, const TensorMap& model,
                     const ExtractParams& params, const Tensor& E, const BadWordsList& B,
                     const std::string& path);
std::vector<DirectionCandidate> load_candidates(const std::string& path);

std::string file_hash(const std::string& path);

}  // namespace gloss
