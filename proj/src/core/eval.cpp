#include "eval.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "common.hpp"
#include "tensorstore.hpp"

namespace gloss {

using nlohmann::json;

Corpus load_corpus(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ERR_DATA, "cannot open corpus file: " + path);
    Corpus corpus;
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            corpus.push_back(json::parse(line).at("ids").get<std::vector<int64_t>>());
        } catch (const json::exception& e) {
            fail(ERR_DATA, path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (corpus.empty()) fail(ERR_DATA, "corpus file has no sequences: " + path);
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail(ERR_DATA, "unwritable path: " + path);
    for (const auto& seq : corpus) f << json{{"ids", seq}}.dump() << "\n";
}

double perplexity(const TensorMap& model, const Corpus& corpus) {
    if (corpus.empty()) fail(ERR_DATA, "perplexity: empty corpus");
    double nll = 0.0;
    int64_t count = 0;
    for (const auto& seq : corpus) {
        if (seq.size() < 2) {
            std::cerr << "warning: skipping length-" << seq.size() << " sequence in perplexity\n";
            continue;
        }
        ForwardResult r = forward(model, seq, false);
        for (size_t t = 1; t < seq.size(); ++t) {
            auto p = softmax(r.logits.row(static_cast<int64_t>(t - 1)));
            nll -= std::log(std::max(p[static_cast<size_t>(seq[t])], 1e-300));
            ++count;
        }
    }
    if (count == 0) fail(ERR_DATA, "perplexity: no scorable positions");
    return std::exp(nll / static_cast<double>(count));
}

static int64_t argmax_lowest(std::span<const double> p) {
    int64_t best = 0;
    for (size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[static_cast<size_t>(best)]) best = static_cast<int64_t>(i);
    return best;
}

MassResult badword_mass(const TensorMap& model, const Corpus& prompts, const BadWordsList& B,
                        int64_t steps) {
    if (steps < 1) fail(ERR_CONFIG, "badword_mass: steps must be >= 1");
    B.validate(model.config.vocab_size);

    MassResult res;
    int64_t n_steps = 0, n_bad = 0;
    for (const auto& prompt : prompts) {
        std::vector<int64_t> ctx = prompt;
        for (int64_t s = 0; s < steps; ++s) {
            if (static_cast<int64_t>(ctx.size()) >= model.config.max_seq) break;
            auto p = next_token_dist(model, ctx);
            double mass = 0.0;
            for (int64_t id : B.ids) mass += p[static_cast<size_t>(id)];
            res.mass += mass;
            int64_t next = argmax_lowest(p);
            n_bad += B.ids.count(next) ? 1 : 0;
            ctx.push_back(next);
            ++n_steps;
        }
    }
    if (n_steps == 0) fail(ERR_DATA, "badword_mass: no generation steps possible");
    res.mass /= static_cast<double>(n_steps);
    res.rate = static_cast<double>(n_bad) / static_cast<double>(n_steps);
    return res;
}

std::vector<int64_t> generate_greedy(const TensorMap& model, std::span<const int64_t> prompt,
                                     int64_t n, const InterventionSpec* spec) {
    if (n < 1) fail(ERR_CONFIG, "generate_greedy: n must be >= 1");
    std::vector<int64_t> ctx(prompt.begin(), prompt.end());
    std::vector<int64_t> out;
    for (int64_t s = 0; s < n; ++s) {
        if (static_cast<int64_t>(ctx.size()) >= model.config.max_seq) break;
        auto p = next_token_dist(model, ctx, spec);
        int64_t next = argmax_lowest(p);
        out.push_back(next);
        ctx.push_back(next);
    }
    return out;
}

json EvalReport::to_json() const {
    return json{{"perplexity", perplexity}, {"badword_mass", badword_mass},
                {"badword_rate", badword_rate}, {"n_prompts", n_prompts},
                {"n_tokens", n_tokens}, {"model_hash", model_hash}};
}

EvalReport evaluate(const TensorMap& model, const Corpus& prompts, const BadWordsList& B,
                    const Corpus* ppl_corpus, int64_t steps) {
    EvalReport rep;
    MassResult mr = badword_mass(model, prompts, B, steps);
    rep.badword_mass = mr.mass;
    rep.badword_rate = mr.rate;
    rep.n_prompts = static_cast<int64_t>(prompts.size());
    rep.model_hash = checkpoint_hash(model);
    if (ppl_corpus) {
        rep.perplexity = perplexity(model, *ppl_corpus);
        for (const auto& seq : *ppl_corpus) rep.n_tokens += static_cast<int64_t>(seq.size());
    }
    return rep;
}

}  // namespace gloss
