#pragma once

#include "ranking.hpp"

namespace gloss {

using Corpus = std::vector<std::vector<int64_t>>;

Corpus load_corpus(const std::string& path);  // JSON lines {"ids": [...]}
void save_corpus(const Corpus& corpus, const std::string& path);

struct EvalReport {
    double perplexity = 0.0;
    double badword_mass = 0.0;
    double badword_rate = 0.0;
    int64_t n_prompts = 0;
    int64_t n_tokens = 0;
    std::string model_hash;

    nlohmann::json to_json() const;
};

// exp of mean per-token NLL (natural log), teacher-forced, positions >= 1,
// averaged across the whole corpus. Length-1 sequences are skipped with a
// warning on stderr.
double perplexity(const TensorMap& model, const Corpus& corpus);

struct MassResult {
    double mass = 0.0;  // mean over prompts and greedy steps of sum_{t in B} p(t)
    double rate = 0.0;  // fraction of generated tokens in B
};

MassResult badword_mass(const TensorMap& model, const Corpus& prompts, const BadWordsList& B,
                        int64_t steps);

// Greedy argmax decoding, ties by lowest token id.
std::vector<int64_t> generate_greedy(const TensorMap& model, std::span<const int64_t> prompt,
                                     int64_t n, const InterventionSpec* spec = nullptr);

EvalReport evaluate(const TensorMap& model, const Corpus& prompts, const BadWordsList& B,
                    const Corpus* ppl_corpus, int64_t steps);

}  // namespace gloss
