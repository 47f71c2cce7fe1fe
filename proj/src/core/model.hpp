#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tensor.hpp"

namespace gloss {

// Declarative activation edit applied to FFN coefficients before the
// value-vector combination.
struct InterventionSpec {
    enum class Mode { none, enhance, suppress, reverse_toward, reverse_away };

    Mode mode = Mode::none;
    // (layer, unit) pairs. For enhance: all targets scaled. For suppress:
    // the first ceil(proportion * |targets|) entries are zeroed, so pass the
    // list in rank order. Reverse modes act on every unit of the layers
    // named here (unit index ignored).
    std::vector<std::pair<int64_t, int64_t>> targets;
    double factor = 10.0;      // enhance scale
    double proportion = 1.0;   // suppress fraction of the target list
    std::vector<double> probe; // reference direction for reverse modes

    bool is_noop() const;
};

struct LayerTrace {
    Mat hidden;   // n_pos x d, FFN input (post-ln2)
    Mat coeffs;   // n_pos x d_ff, post-intervention coefficients m
    Mat ffn_out;  // n_pos x d, o = m . W_V
};

struct ForwardResult {
    Mat logits;  // n_pos x vocab
    std::vector<LayerTrace> trace;  // empty unless capture requested
};

// Pre-layer-norm GPT-2-style forward pass with exact (erf) GELU, causal
// attention, and tied output embedding. Deterministic; pure in
// (model, tokens, spec).
ForwardResult forward(const TensorMap& model, std::span<const int64_t> tokens, bool capture,
                      const InterventionSpec* spec = nullptr);

// Single-position FFN: m_i = gelu(x . k_i), o = sum_i m_i v_i.
std::pair<std::vector<double>, std::vector<double>> ffn_apply(const TensorMap& model,
                                                              int64_t layer,
                                                              std::span<const double> x);

// Softmax of the last-position logits.
std::vector<double> next_token_dist(const TensorMap& model, std::span<const int64_t> tokens,
                                    const InterventionSpec* spec = nullptr);

double gelu(double x);
std::vector<double> softmax(std::span<const double> logits);

}  // namespace gloss
