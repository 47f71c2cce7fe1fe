#pragma once

#include <string>
#include <vector>

#include "model.hpp"

namespace gloss {

struct PromptPairSet {
    // (toxic, non-toxic) token-id sequences
    std::vector<std::pair<std::vector<int64_t>, std::vector<int64_t>>> pairs;

    size_t size() const { return pairs.size(); }
    void validate() const;  // N >= 2, no empty sequences
};

PromptPairSet load_prompt_pairs(const std::string& path);
void save_prompt_pairs(const PromptPairSet& set, const std::string& path);

struct ContrastiveMatrix {
    int64_t layer = 0;
    Mat T;   // mean-centered
    Mat T0;  // raw difference X+ - X-
};

struct DirectionCandidate {
    std::vector<double> vector;  // unit norm
    int64_t layer = 0;
    int64_t svd_rank = 0;  // 1-based
    double sigma = 0.0;
    double tox = 0.0;  // filled by the ranking module
};

// Per-layer mean FFN outputs over prompt pairs. Row i of each matrix is the
// position-averaged o^l for prompt i (last position only when
// last_token_only is set).
struct FfnMeans {
    std::vector<Mat> pos;  // per layer, N x d
    std::vector<Mat> neg;
};

FfnMeans collect_ffn_means(const TensorMap& model, const PromptPairSet& pairs,
                           bool last_token_only = false);

ContrastiveMatrix build_contrastive(const Mat& Xp, const Mat& Xm, int64_t layer = 0);

// Top-k right singular vectors of T as candidates; degenerate ranks are
// skipped. Throws ERR_NUMERIC when the matrix has no usable direction.
std::vector<DirectionCandidate> extract_candidates(const ContrastiveMatrix& T, int64_t k);

}  // namespace gloss
