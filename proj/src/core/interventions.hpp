#pragma once

#include "contrastive.hpp"
#include "ranking.hpp"

namespace gloss {

struct ProbeVector {
    std::vector<double> direction;  // unit norm
    int64_t layer = 0;
    std::string method = "diff-of-means";
};

// Normalized difference of mean last-token hidden states (FFN input) between
// toxic and non-toxic prompts at one layer.
ProbeVector build_probe(const TensorMap& model, const PromptPairSet& pairs, int64_t layer);

struct UnitScore {
    int64_t layer = 0;
    int64_t unit = 0;
    double cosine = 0.0;
};

// All L*d_ff value vectors scored by cosine with the probe, descending.
std::vector<UnitScore> rank_value_vectors(const TensorMap& model, const ProbeVector& probe);

ForwardResult intervene_forward(const TensorMap& model, std::span<const int64_t> tokens,
                                const InterventionSpec& spec, bool capture = false);

// Mean hidden state (FFN input) at one layer over a corpus.
std::vector<double> mean_activation(const TensorMap& model,
                                    const std::vector<std::vector<int64_t>>& corpus,
                                    int64_t layer);

// Vocabulary view of xbar + alpha_shift * direction.
std::vector<RankedToken> shift_and_project(std::span<const double> xbar,
                                           std::span<const double> direction, double alpha_shift,
                                           const Tensor& E, int64_t m);

}  // namespace gloss
