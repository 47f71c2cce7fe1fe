#include "contrastive.hpp"

#include <fstream>

#include "common.hpp"

namespace gloss {

using nlohmann::json;

void PromptPairSet::validate() const {
    if (pairs.size() < 2) fail(ERR_DATA, "prompt pair set needs at least 2 pairs");
    for (size_t i = 0; i < pairs.size(); ++i)
        if (pairs[i].first.empty() || pairs[i].second.empty())
            fail(ERR_DATA, "empty prompt in pair " + std::to_string(i));
}

PromptPairSet load_prompt_pairs(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ERR_DATA, "cannot open prompt pairs file: " + path);
    PromptPairSet set;
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
            set.pairs.emplace_back(j.at("pos").get<std::vector<int64_t>>(),
                                   j.at("neg").get<std::vector<int64_t>>());
        } catch (const json::exception& e) {
            fail(ERR_DATA, path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    set.validate();
    return set;
}

void save_prompt_pairs(const PromptPairSet& set, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail(ERR_DATA, "unwritable path: " + path);
    for (const auto& [pos, neg] : set.pairs)
        f << json{{"neg", neg}, {"pos", pos}}.dump() << "\n";
}

static void mean_rows(const Mat& m, bool last_only, std::span<double> out) {
    if (last_only) {
        auto r = m.row(m.rows - 1);
        std::copy(r.begin(), r.end(), out.begin());
        return;
    }
    for (int64_t j = 0; j < m.cols; ++j) {
        double s = 0.0;
        for (int64_t t = 0; t < m.rows; ++t) s += m.at(t, j);
        out[static_cast<size_t>(j)] = s / static_cast<double>(m.rows);
    }
}

FfnMeans collect_ffn_means(const TensorMap& model, const PromptPairSet& pairs,
                           bool last_token_only) {
    pairs.validate();
    const int64_t L = model.config.n_layers, d = model.config.d_model;
    const int64_t N = static_cast<int64_t>(pairs.size());

    FfnMeans out;
    out.pos.assign(static_cast<size_t>(L), Mat(N, d));
    out.neg.assign(static_cast<size_t>(L), Mat(N, d));

    for (int64_t i = 0; i < N; ++i) {
        try {
            ForwardResult rp = forward(model, pairs.pairs[static_cast<size_t>(i)].first, true);
            ForwardResult rn = forward(model, pairs.pairs[static_cast<size_t>(i)].second, true);
            for (int64_t l = 0; l < L; ++l) {
                mean_rows(rp.trace[static_cast<size_t>(l)].ffn_out, last_token_only,
                          out.pos[static_cast<size_t>(l)].row(i));
                mean_rows(rn.trace[static_cast<size_t>(l)].ffn_out, last_token_only,
                          out.neg[static_cast<size_t>(l)].row(i));
            }
        } catch (const Error& e) {
            fail(e.code, "pair " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

ContrastiveMatrix build_contrastive(const Mat& Xp, const Mat& Xm, int64_t layer) {
    if (Xp.rows != Xm.rows || Xp.cols != Xm.cols)
        fail(ERR_DATA, "build_contrastive: shape mismatch");
    ContrastiveMatrix cm;
    cm.layer = layer;
    cm.T0 = Mat(Xp.rows, Xp.cols);
    for (size_t i = 0; i < cm.T0.a.size(); ++i) cm.T0.a[i] = Xp.a[i] - Xm.a[i];

    cm.T = cm.T0;
    for (int64_t c = 0; c < cm.T.cols; ++c) {
        double mu = 0.0;
        for (int64_t r = 0; r < cm.T.rows; ++r) mu += cm.T.at(r, c);
        mu /= static_cast<double>(cm.T.rows);
        for (int64_t r = 0; r < cm.T.rows; ++r) cm.T.at(r, c) -= mu;
    }
    return cm;
}

std::vector<DirectionCandidate> extract_candidates(const ContrastiveMatrix& cm, int64_t k) {
    bool all_zero = true;
    for (double x : cm.T.a)
        if (x != 0.0) { all_zero = false; break; }
    if (all_zero)
        fail(ERR_NUMERIC,
             "degenerate contrastive matrix at layer " + std::to_string(cm.layer));

    auto trips = top_right_singular(cm.T, k);
    std::vector<DirectionCandidate> out;
    for (size_t i = 0; i < trips.size(); ++i) {
        if (trips[i].degenerate) continue;  // rank deficiency: flagged by omission
        DirectionCandidate c;
        c.vector = std::move(trips[i].v);
        c.layer = cm.layer;
        c.svd_rank = static_cast<int64_t>(i) + 1;
        c.sigma = trips[i].sigma;
        out.push_back(std::move(c));
    }
    if (out.empty())
        fail(ERR_NUMERIC,
             "degenerate rank: no usable direction at layer " + std::to_string(cm.layer));
    return out;
}

}  // namespace gloss
