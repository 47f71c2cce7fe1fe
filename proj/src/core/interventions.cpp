#include "interventions.hpp"

#include <algorithm>

#include "common.hpp"

namespace gloss {

ProbeVector build_probe(const TensorMap& model, const PromptPairSet& pairs, int64_t layer) {
    pairs.validate();
    if (layer < 0 || layer >= model.config.n_layers) fail(ERR_DATA, "probe layer out of range");
    const int64_t d = model.config.d_model;

    std::vector<double> diff(static_cast<size_t>(d), 0.0);
    for (const auto& [pos, neg] : pairs.pairs) {
        ForwardResult rp = forward(model, pos, true);
        ForwardResult rn = forward(model, neg, true);
        const Mat& hp = rp.trace[static_cast<size_t>(layer)].hidden;
        const Mat& hn = rn.trace[static_cast<size_t>(layer)].hidden;
        auto lp = hp.row(hp.rows - 1);
        auto ln = hn.row(hn.rows - 1);
        for (int64_t j = 0; j < d; ++j) diff[static_cast<size_t>(j)] += lp[static_cast<size_t>(j)] - ln[static_cast<size_t>(j)];
    }
    for (auto& x : diff) x /= static_cast<double>(pairs.size());

    if (norm(diff) < 1e-12) fail(ERR_NUMERIC, "zero difference between prompt classes; probe undefined");
    normalize(diff);

    ProbeVector p;
    p.direction = std::move(diff);
    p.layer = layer;
    return p;
}

std::vector<UnitScore> rank_value_vectors(const TensorMap& model, const ProbeVector& probe) {
    const int64_t L = model.config.n_layers, dm = model.config.d_ff, d = model.config.d_model;
    std::vector<UnitScore> scores;
    scores.reserve(static_cast<size_t>(L * dm));
    for (int64_t l = 0; l < L; ++l) {
        const Tensor& V = model.get("layer." + std::to_string(l) + ".ffn.V");
        for (int64_t u = 0; u < dm; ++u) {
            const float* vr = V.data.data() + u * d;
            double num = 0.0, nv = 0.0;
            for (int64_t j = 0; j < d; ++j) {
                double x = static_cast<double>(vr[j]);
                num += x * probe.direction[static_cast<size_t>(j)];
                nv += x * x;
            }
            double c = nv > 0.0 ? num / std::sqrt(nv) : 0.0;
            scores.push_back({l, u, c});
        }
    }
    std::stable_sort(scores.begin(), scores.end(),
                     [](const UnitScore& a, const UnitScore& b) { return a.cosine > b.cosine; });
    return scores;
}

ForwardResult intervene_forward(const TensorMap& model, std::span<const int64_t> tokens,
                                const InterventionSpec& spec, bool capture) {
    return forward(model, tokens, capture, &spec);
}

std::vector<double> mean_activation(const TensorMap& model,
                                    const std::vector<std::vector<int64_t>>& corpus,
                                    int64_t layer) {
    if (corpus.empty()) fail(ERR_DATA, "mean_activation: empty corpus");
    if (layer < 0 || layer >= model.config.n_layers) fail(ERR_DATA, "mean_activation: layer out of range");
    const int64_t d = model.config.d_model;
    std::vector<double> acc(static_cast<size_t>(d), 0.0);
    int64_t count = 0;
    for (const auto& seq : corpus) {
        ForwardResult r = forward(model, seq, true);
        const Mat& h = r.trace[static_cast<size_t>(layer)].hidden;
        for (int64_t t = 0; t < h.rows; ++t) {
            auto row = h.row(t);
            for (int64_t j = 0; j < d; ++j) acc[static_cast<size_t>(j)] += row[static_cast<size_t>(j)];
            ++count;
        }
    }
    for (auto& x : acc) x /= static_cast<double>(count);
    return acc;
}

std::vector<RankedToken> shift_and_project(std::span<const double> xbar,
                                           std::span<const double> direction, double alpha_shift,
                                           const Tensor& E, int64_t m) {
    if (xbar.size() != direction.size()) fail(ERR_DATA, "shift_and_project: dimension mismatch");
    std::vector<double> shifted(xbar.begin(), xbar.end());
    for (size_t j = 0; j < shifted.size(); ++j) shifted[j] += alpha_shift * direction[j];
    return vocab_project(E, shifted, m);
}

}  // namespace gloss
