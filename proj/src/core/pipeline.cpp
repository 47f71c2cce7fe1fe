#include "pipeline.hpp"

#include <fstream>

#include "common.hpp"
#include "tensorstore.hpp"

namespace gloss {

using nlohmann::json;

std::string file_hash(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ERR_DATA, "cannot open file for hashing: " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return hex64(fnv1a64(bytes.data(), bytes.size()));
}

namespace {

void write_manifest(const std::string& command, const json& config,
                    const std::vector<std::string>& inputs, const std::string& output) {
    json inp = json::object();
    for (const auto& p : inputs) inp[p] = file_hash(p);
    std::string cfg_dump = config.dump();
    json manifest = {
        {"command", command},
        {"config", config},
        {"config_hash", hex64(fnv1a64(cfg_dump.data(), cfg_dump.size()))},
        {"inputs", inp},
        {"output", {{output, file_hash(output)}}},
        {"version", "0.1.0"},
    };
    std::ofstream f(output + ".manifest.json", std::ios::trunc);
    if (!f) fail(ERR_DATA, "unwritable manifest path for " + output);
    f << manifest.dump(2) << "\n";
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail(ERR_DATA, "unwritable path: " + path);
    f << text;
}

}  // namespace

void save_candidates(const std::vector<DirectionCandidate>& cands, const TensorMap& model,
                     const ExtractParams& params, const Tensor& E, const BadWordsList& B,
                     const std::string& path) {
    json arr = json::array();
    for (const auto& c : cands) {
        auto top = vocab_project(E, c.vector, std::min<int64_t>(params.m, model.config.vocab_size));
        json toks = json::array();
        for (const auto& t : top) toks.push_back({{"id", t.id}, {"score", t.score}});
        arr.push_back({{"layer", c.layer},
                       {"rank", c.svd_rank},
                       {"sigma", c.sigma},
                       {"score", c.tox},
                       {"top_tokens", toks},
                       {"vector", c.vector}});
    }
    json out = {
        {"candidates", arr},
        {"d", model.config.d_model},
        {"k", params.k},
        {"m", params.m},
        {"model_hash", checkpoint_hash(model)},
        {"n_layers", model.config.n_layers},
    };
    write_text(path, out.dump(2) + "\n");
}

std::vector<DirectionCandidate> load_candidates(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ERR_DATA, "cannot open candidates file: " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        fail(ERR_DATA, "malformed candidates file: " + std::string(e.what()));
    }
    std::vector<DirectionCandidate> out;
    try {
        for (const auto& c : j.at("candidates")) {
            DirectionCandidate d;
            d.layer = c.at("layer").get<int64_t>();
            d.svd_rank = c.at("rank").get<int64_t>();
            d.sigma = c.at("sigma").get<double>();
            d.tox = c.at("score").get<double>();
            d.vector = c.at("vector").get<std::vector<double>>();
            out.push_back(std::move(d));
        }
    } catch (const json::exception& e) {
        fail(ERR_DATA, "malformed candidates file: " + std::string(e.what()));
    }
    if (out.empty()) fail(ERR_DATA, "candidates file has no candidates: " + path);
    return out;
}

void run_extract(const TensorMap& model, const std::string& pairs_path,
                 const std::string& badwords_path, const ExtractParams& params,
                 const std::string& out_candidates_json) {
    PromptPairSet pairs = load_prompt_pairs(pairs_path);
    BadWordsList B = load_bad_words(badwords_path);
    B.validate(model.config.vocab_size);
    const Tensor& E = model.get("emb.E");
    const int64_t m = std::min<int64_t>(params.m, model.config.vocab_size);

    FfnMeans means = collect_ffn_means(model, pairs, params.last_token_only);
    std::vector<DirectionCandidate> all;
    for (int64_t l = 0; l < model.config.n_layers; ++l) {
        ContrastiveMatrix cm = build_contrastive(means.pos[static_cast<size_t>(l)],
                                                 means.neg[static_cast<size_t>(l)], l);
        int64_t k = std::min<int64_t>(params.k, std::min(cm.T.rows, cm.T.cols));
        auto cands = extract_candidates(cm, k);
        for (auto& c : cands) {
            ToxScore ts = tox_score(c.vector, E, B, m);
            c.tox = ts.score;
            c.vector = std::move(ts.oriented);
            all.push_back(std::move(c));
        }
    }
    save_candidates(all, model, params, E, B, out_candidates_json);
    write_manifest("extract",
                   {{"k", params.k},
                    {"m", params.m},
                    {"last_token_only", params.last_token_only},
                    {"model_hash", checkpoint_hash(model)}},
                   {pairs_path, badwords_path}, out_candidates_json);
}

void run_subspace(const TensorMap& model, const std::string& candidates_json,
                  const std::string& badwords_path, const SubspaceParams& params,
                  const std::string& out_subspace_json) {
    auto cands = load_candidates(candidates_json);
    BadWordsList B = load_bad_words(badwords_path);
    B.validate(model.config.vocab_size);

    // m for re-orientation comes from the extract stage
    std::ifstream f(candidates_json);
    json meta = json::parse(f);
    int64_t m = std::min<int64_t>(meta.value("m", int64_t{100}), model.config.vocab_size);

    Selection sel = select_high(cands, params.alpha_sel);
    if (sel.empty())
        fail(ERR_NUMERIC, "empty V_high selection (tau=" + std::to_string(sel.tau) +
                              "); lower alpha_sel");
    GlobalSubspace s =
        build_global_subspace(sel, params.eta, model.get("emb.E"), B, m, params.center_pca);
    s.alpha_sel = params.alpha_sel;
    save_subspace(s, out_subspace_json);
    write_manifest("subspace",
                   {{"alpha_sel", params.alpha_sel},
                    {"eta", params.eta},
                    {"center_pca", params.center_pca},
                    {"model_hash", checkpoint_hash(model)}},
                   {candidates_json, badwords_path}, out_subspace_json);
}

void run_apply(const TensorMap& model, const std::string& subspace_json, int64_t layer_start,
               int64_t layer_end, const std::string& out_checkpoint) {
    GlobalSubspace s = load_subspace(subspace_json);
    if (layer_start < 0) layer_start = default_layer_start(model.config);
    if (layer_end < 0) layer_end = model.config.n_layers - 1;
    EditPlan plan{layer_start, layer_end};
    TensorMap edited = apply_gloss(model, s, plan);
    save_checkpoint(edited, out_checkpoint);
    write_manifest("apply",
                   {{"layer_start", layer_start},
                    {"layer_end", layer_end},
                    {"model_hash", checkpoint_hash(model)}},
                   {subspace_json}, out_checkpoint);
}

void run_control(const TensorMap& model, const std::string& subspace_json, uint64_t seed,
                 int64_t layer_start, int64_t layer_end, const std::string& out_checkpoint) {
    GlobalSubspace s = load_subspace(subspace_json);
    GlobalSubspace control = random_control_subspace(s, seed);
    if (layer_start < 0) layer_start = default_layer_start(model.config);
    if (layer_end < 0) layer_end = model.config.n_layers - 1;
    EditPlan plan{layer_start, layer_end};
    TensorMap edited = apply_gloss(model, control, plan);
    edited.meta["edit"]["type"] = "random-orthogonal-control";
    edited.meta["edit"]["seed"] = seed;
    save_checkpoint(edited, out_checkpoint);
    write_manifest("control",
                   {{"layer_start", layer_start},
                    {"layer_end", layer_end},
                    {"seed", seed},
                    {"model_hash", checkpoint_hash(model)}},
                   {subspace_json}, out_checkpoint);
}

void run_eval(const TensorMap& model, const std::string& prompts_path,
              const std::string& badwords_path, const std::string& ppl_corpus_path,
              int64_t steps, const std::string& out_report_json) {
    Corpus prompts = load_corpus(prompts_path);
    BadWordsList B = load_bad_words(badwords_path);
    B.validate(model.config.vocab_size);
    std::optional<Corpus> ppl;
    if (!ppl_corpus_path.empty()) ppl = load_corpus(ppl_corpus_path);

    EvalReport rep = evaluate(model, prompts, B, ppl ? &*ppl : nullptr, steps);
    write_text(out_report_json, rep.to_json().dump(2) + "\n");

    std::vector<std::string> inputs = {prompts_path, badwords_path};
    if (!ppl_corpus_path.empty()) inputs.push_back(ppl_corpus_path);
    write_manifest("eval", {{"steps", steps}, {"model_hash", checkpoint_hash(model)}}, inputs,
                   out_report_json);
}

void run_intervene(const TensorMap& model, const std::string& pairs_path,
                   const std::string& prompts_path, const std::string& badwords_path,
                   const InterveneParams& params, const std::string& out_csv) {
    PromptPairSet pairs = load_prompt_pairs(pairs_path);
    Corpus prompts = load_corpus(prompts_path);
    BadWordsList B = load_bad_words(badwords_path);
    B.validate(model.config.vocab_size);

    int64_t probe_layer = params.probe_layer >= 0 ? params.probe_layer : model.config.n_layers / 2;
    ProbeVector probe = build_probe(model, pairs, probe_layer);
    auto ranked = rank_value_vectors(model, probe);

    auto mass_with = [&](const InterventionSpec* spec) {
        double total = 0.0;
        int64_t n = 0;
        for (const auto& prompt : prompts) {
            std::vector<int64_t> ctx = prompt;
            for (int64_t s = 0; s < params.steps; ++s) {
                if (static_cast<int64_t>(ctx.size()) >= model.config.max_seq) break;
                auto p = next_token_dist(model, ctx, spec);
                double mass = 0.0;
                for (int64_t id : B.ids) mass += p[static_cast<size_t>(id)];
                total += mass;
                int64_t next = 0;
                for (size_t i = 1; i < p.size(); ++i)
                    if (p[i] > p[static_cast<size_t>(next)]) next = static_cast<int64_t>(i);
                ctx.push_back(next);
                ++n;
            }
        }
        return total / static_cast<double>(n);
    };

    std::string csv = "mode,x,badword_mass\n";
    csv += "baseline,0," + std::to_string(mass_with(nullptr)) + "\n";

    if (params.mode == "enhance") {
        for (double xd : params.xs) {
            auto x = static_cast<int64_t>(xd);
            InterventionSpec spec;
            spec.mode = InterventionSpec::Mode::enhance;
            spec.factor = params.factor;
            for (int64_t i = 0; i < x && i < static_cast<int64_t>(ranked.size()); ++i)
                spec.targets.emplace_back(ranked[static_cast<size_t>(i)].layer,
                                          ranked[static_cast<size_t>(i)].unit);
            csv += "enhance," + std::to_string(x) + "," + std::to_string(mass_with(&spec)) + "\n";
        }
    } else if (params.mode == "suppress") {
        for (double prop : params.xs) {
            InterventionSpec spec;
            spec.mode = InterventionSpec::Mode::suppress;
            spec.proportion = prop;
            for (int64_t i = 0; i < params.pool && i < static_cast<int64_t>(ranked.size()); ++i)
                spec.targets.emplace_back(ranked[static_cast<size_t>(i)].layer,
                                          ranked[static_cast<size_t>(i)].unit);
            csv += "suppress," + std::to_string(prop) + "," + std::to_string(mass_with(&spec)) + "\n";
        }
    } else if (params.mode == "reverse") {
        for (bool toward : {true, false}) {
            InterventionSpec spec;
            spec.mode = toward ? InterventionSpec::Mode::reverse_toward
                               : InterventionSpec::Mode::reverse_away;
            spec.probe = probe.direction;
            for (int64_t l = 0; l < model.config.n_layers; ++l) spec.targets.emplace_back(l, 0);
            csv += std::string(toward ? "reverse-toward" : "reverse-away") + ",0," +
                   std::to_string(mass_with(&spec)) + "\n";
        }
    } else {
        fail(ERR_CONFIG, "unknown intervention mode: " + params.mode);
    }

    write_text(out_csv, csv);
    write_manifest("intervene",
                   {{"mode", params.mode},
                    {"probe_layer", probe_layer},
                    {"pool", params.pool},
                    {"factor", params.factor},
                    {"xs", params.xs},
                    {"steps", params.steps},
                    {"model_hash", checkpoint_hash(model)}},
                   {pairs_path, prompts_path, badwords_path}, out_csv);
}

void run_shift(const TensorMap& model, const std::string& subspace_json,
               const std::string& corpus_path, const std::string& badwords_path,
               const ShiftParams& params, const std::string& out_json) {
    GlobalSubspace s = load_subspace(subspace_json);
    if (params.component < 0 || params.component >= s.rank())
        fail(ERR_CONFIG, "shift component out of range");
    Corpus corpus = load_corpus(corpus_path);
    BadWordsList B = load_bad_words(badwords_path);
    B.validate(model.config.vocab_size);

    auto xbar = mean_activation(model, corpus, params.layer);
    auto direction = s.basis.vectors.row(params.component);
    int64_t m = std::min<int64_t>(params.m, model.config.vocab_size);

    json rows = json::array();
    for (double alpha : params.alphas) {
        auto top = shift_and_project(xbar, direction, alpha, model.get("emb.E"), m);
        json toks = json::array();
        int64_t bad = 0;
        for (const auto& t : top) {
            toks.push_back(t.id);
            bad += B.ids.count(t.id) ? 1 : 0;
        }
        rows.push_back({{"alpha", alpha},
                        {"tokens", toks},
                        {"bad_fraction", static_cast<double>(bad) / static_cast<double>(m)}});
    }
    write_text(out_json,
               json{{"layer", params.layer}, {"component", params.component}, {"rows", rows}}
                       .dump(2) +
                   "\n");
    write_manifest("shift",
                   {{"layer", params.layer},
                    {"component", params.component},
                    {"m", params.m},
                    {"alphas", params.alphas},
                    {"model_hash", checkpoint_hash(model)}},
                   {subspace_json, corpus_path, badwords_path}, out_json);
}

void run_sweep_l0(const TensorMap& model, const std::string& subspace_json,
                  const std::string& prompts_path, const std::string& corpus_path,
                  const std::string& badwords_path, int64_t steps, const std::string& out_csv) {
    GlobalSubspace s = load_subspace(subspace_json);
    Corpus prompts = load_corpus(prompts_path);
    Corpus corpus = load_corpus(corpus_path);
    BadWordsList B = load_bad_words(badwords_path);
    B.validate(model.config.vocab_size);

    std::string csv = "l0,badword_mass,perplexity\n";
    for (int64_t l0 = 0; l0 < model.config.n_layers; ++l0) {
        EditPlan plan{l0, model.config.n_layers - 1};
        TensorMap edited = apply_gloss(model, s, plan);
        MassResult mr = badword_mass(edited, prompts, B, steps);
        double ppl = perplexity(edited, corpus);
        csv += std::to_string(l0) + "," + std::to_string(mr.mass) + "," + std::to_string(ppl) + "\n";
    }
    write_text(out_csv, csv);
    write_manifest("sweep-l0", {{"steps", steps}, {"model_hash", checkpoint_hash(model)}},
                   {subspace_json, prompts_path, corpus_path, badwords_path}, out_csv);
}

void run_fixture_gen(int64_t n_layers, int64_t d_model, int64_t d_ff, int64_t vocab,
                     int64_t n_bad, uint64_t seed, const std::string& out_dir) {
    PlantedFixture fx = gen_planted_model(n_layers, d_model, d_ff, vocab, n_bad, seed);
    write_fixture(fx, out_dir);
    json cfg = {{"n_layers", n_layers}, {"d_model", d_model},   {"d_ff", d_ff},
                {"vocab", vocab},       {"n_bad", n_bad},       {"seed", seed}};
    write_manifest("fixture-gen", cfg, {}, out_dir + "/model.ckpt");
}

}  // namespace gloss
