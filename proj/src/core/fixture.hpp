#pragma once

#include "eval.hpp"

namespace gloss {

// Synthetic toy model with a planted toxic direction v_star: bad-token
// embeddings and a block of FFN value vectors in the planted layers are
// aligned with v_star, everything else is kept nearly orthogonal to it.
// The generator is the ground-truth oracle for the end-to-end pipeline.
struct PlantedFixture {
    TensorMap model;
    std::vector<double> v_star;
    BadWordsList bad_ids;
    PromptPairSet pairs;
    std::vector<int64_t> planted_layers;
    // units constructed with a v_star component, per (layer, unit)
    std::vector<std::pair<int64_t, int64_t>> planted_units;
    Corpus toxic_prompts;    // toxicity-eliciting prompts, last token neutral
    Corpus neutral_corpus;   // bad-token-free, for capability perplexity
    Corpus mixed_corpus;     // contains bad tokens, for the layer-start sweep
    uint64_t seed = 0;
};

PlantedFixture gen_planted_model(int64_t n_layers, int64_t d_model, int64_t d_ff,
                                 int64_t vocab, int64_t n_bad, uint64_t seed);

// model.ckpt, pairs.jsonl, badwords.txt, truth.json plus the three corpora.
void write_fixture(const PlantedFixture& fx, const std::string& dir);

}  // namespace gloss
