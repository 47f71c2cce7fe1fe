// gloss command-line front end. Talks to the shared library exclusively
// through the C API in gloss.h.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gloss.h"

namespace {

struct ModelHandle {
    gloss_model* h = nullptr;
    ~ModelHandle() { gloss_model_close(h); }
};

int report(gloss_status st) {
    if (st == GLOSS_OK) return 0;
    std::fprintf(stderr, "{\"error\": \"%s\", \"code\": %d}\n", gloss_last_error(),
                 static_cast<int>(st));
    return static_cast<int>(st);
}

int open_model(const std::string& path, ModelHandle& m) {
    return report(gloss_model_open(path.c_str(), &m.h));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gloss: identify and remove a global toxic subspace from FFN value weights"};
    app.require_subcommand(1);

    // fixture gen
    auto* fixture = app.add_subcommand("fixture", "synthetic planted-direction fixtures");
    fixture->require_subcommand(1);
    auto* gen = fixture->add_subcommand("gen", "generate a planted toy model + datasets");
    int64_t fx_layers = 4, fx_d = 32, fx_dff = 64, fx_vocab = 100, fx_nbad = 10;
    uint64_t fx_seed = 1;
    std::string fx_out = "fixture";
    gen->add_option("--layers", fx_layers, "number of layers");
    gen->add_option("--d-model", fx_d, "hidden size");
    gen->add_option("--d-ff", fx_dff, "FFN width");
    gen->add_option("--vocab", fx_vocab, "vocabulary size");
    gen->add_option("--n-bad", fx_nbad, "number of planted bad tokens");
    gen->add_option("--seed", fx_seed, "generator seed");
    gen->add_option("-o,--out", fx_out, "output directory");

    // shared model option helper
    auto add_model = [](CLI::App* cmd, std::string& path) {
        cmd->add_option("-m,--model", path, "checkpoint path")->required();
    };

    // extract
    auto* extract = app.add_subcommand("extract", "layer-wise candidate directions + tox scores");
    std::string ex_model, ex_pairs, ex_badwords, ex_out = "candidates.json";
    int64_t ex_k = 10, ex_m = 100;
    bool ex_last = false;
    add_model(extract, ex_model);
    extract->add_option("--pairs", ex_pairs, "prompt pairs JSONL")->required();
    extract->add_option("--badwords", ex_badwords, "bad words file")->required();
    extract->add_option("-k", ex_k, "candidates per layer");
    extract->add_option("--top-m", ex_m, "tokens per projection for tox_score");
    extract->add_flag("--last-token-only", ex_last, "aggregate only the last position");
    extract->add_option("-o,--out", ex_out, "candidates JSON output");

    // subspace
    auto* subspace = app.add_subcommand("subspace", "global subspace from scored candidates");
    std::string ss_model, ss_cands, ss_badwords, ss_out = "subspace.json";
    double ss_alpha = 1.0, ss_eta = 0.8;
    bool ss_center = false;
    add_model(subspace, ss_model);
    subspace->add_option("--candidates", ss_cands, "candidates JSON")->required();
    subspace->add_option("--badwords", ss_badwords, "bad words file")->required();
    subspace->add_option("--alpha", ss_alpha, "selection strictness multiplier");
    subspace->add_option("--eta", ss_eta, "PCA cumulative variance threshold");
    subspace->add_flag("--center", ss_center, "mean-center before PCA");
    subspace->add_option("-o,--out", ss_out, "subspace JSON output");

    // apply
    auto* apply = app.add_subcommand("apply", "project FFN value weights onto the complement");
    std::string ap_model, ap_sub, ap_out = "edited.ckpt";
    int64_t ap_l0 = -1, ap_lend = -1;
    add_model(apply, ap_model);
    apply->add_option("--subspace", ap_sub, "subspace JSON")->required();
    apply->add_option("--layer-start", ap_l0, "first edited layer (default ceil(L/2))");
    apply->add_option("--layer-end", ap_lend, "last edited layer inclusive (default L-1)");
    apply->add_option("-o,--out", ap_out, "edited checkpoint output");

    // control
    auto* control = app.add_subcommand("control", "edit with a random orthogonal subspace");
    std::string ct_model, ct_sub, ct_out = "control.ckpt";
    int64_t ct_l0 = -1, ct_lend = -1;
    uint64_t ct_seed = 1;
    add_model(control, ct_model);
    control->add_option("--subspace", ct_sub, "subspace JSON")->required();
    control->add_option("--seed", ct_seed, "control seed");
    control->add_option("--layer-start", ct_l0, "first edited layer (default ceil(L/2))");
    control->add_option("--layer-end", ct_lend, "last edited layer inclusive (default L-1)");
    control->add_option("-o,--out", ct_out, "edited checkpoint output");

    // eval
    auto* eval = app.add_subcommand("eval", "badword mass / rate and perplexity report");
    std::string ev_model, ev_prompts, ev_badwords, ev_corpus, ev_out = "report.json";
    int64_t ev_steps = 10;
    add_model(eval, ev_model);
    eval->add_option("--prompts", ev_prompts, "prompts JSONL")->required();
    eval->add_option("--badwords", ev_badwords, "bad words file")->required();
    eval->add_option("--ppl-corpus", ev_corpus, "perplexity corpus JSONL (optional)");
    eval->add_option("--steps", ev_steps, "greedy continuation window");
    eval->add_option("-o,--out", ev_out, "report JSON output");

    // intervene
    auto* intervene = app.add_subcommand("intervene", "activation intervention sweeps (CSV)");
    std::string iv_model, iv_pairs, iv_prompts, iv_badwords, iv_mode = "enhance",
                iv_out = "intervene.csv";
    int64_t iv_probe_layer = -1, iv_pool = 20, iv_steps = 10;
    double iv_factor = 10.0;
    std::vector<double> iv_xs;
    add_model(intervene, iv_model);
    intervene->add_option("--pairs", iv_pairs, "prompt pairs JSONL (probe source)")->required();
    intervene->add_option("--prompts", iv_prompts, "prompts JSONL")->required();
    intervene->add_option("--badwords", iv_badwords, "bad words file")->required();
    intervene->add_option("--mode", iv_mode, "enhance | suppress | reverse");
    intervene->add_option("--probe-layer", iv_probe_layer, "probe layer (default L/2)");
    intervene->add_option("--pool", iv_pool, "ranked toxic-vector list size (suppress)");
    intervene->add_option("--factor", iv_factor, "enhancement scale");
    intervene->add_option("-x", iv_xs, "sweep values: counts (enhance) or proportions (suppress)");
    intervene->add_option("--steps", iv_steps, "greedy continuation window");
    intervene->add_option("-o,--out", iv_out, "CSV output");

    // shift
    auto* shift = app.add_subcommand("shift", "shift mean activation along a toxic direction");
    std::string sh_model, sh_sub, sh_corpus, sh_badwords, sh_out = "shift.json";
    int64_t sh_layer = 0, sh_component = 0, sh_m = 10;
    std::vector<double> sh_alphas;
    add_model(shift, sh_model);
    shift->add_option("--subspace", sh_sub, "subspace JSON")->required();
    shift->add_option("--corpus", sh_corpus, "corpus JSONL for the mean activation")->required();
    shift->add_option("--badwords", sh_badwords, "bad words file")->required();
    shift->add_option("--layer", sh_layer, "layer of the mean activation");
    shift->add_option("--component", sh_component, "subspace basis row used as direction");
    shift->add_option("--top-m", sh_m, "tokens per projection");
    shift->add_option("--alpha", sh_alphas, "scaling factors (repeatable)");
    shift->add_option("-o,--out", sh_out, "token table JSON output");

    // sweep-l0
    auto* sweep = app.add_subcommand("sweep-l0", "layer-start sweep: toxicity vs perplexity");
    std::string sw_model, sw_sub, sw_prompts, sw_corpus, sw_badwords, sw_out = "sweep_l0.csv";
    int64_t sw_steps = 10;
    add_model(sweep, sw_model);
    sweep->add_option("--subspace", sw_sub, "subspace JSON")->required();
    sweep->add_option("--prompts", sw_prompts, "prompts JSONL")->required();
    sweep->add_option("--corpus", sw_corpus, "perplexity corpus JSONL")->required();
    sweep->add_option("--badwords", sw_badwords, "bad words file")->required();
    sweep->add_option("--steps", sw_steps, "greedy continuation window");
    sweep->add_option("-o,--out", sw_out, "CSV output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints help/usage or the parse error
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    if (gen->parsed())
        return report(gloss_fixture_gen(fx_layers, fx_d, fx_dff, fx_vocab, fx_nbad, fx_seed,
                                        fx_out.c_str()));

    if (extract->parsed()) {
        ModelHandle m;
        if (int rc = open_model(ex_model, m)) return rc;
        return report(gloss_extract(m.h, ex_pairs.c_str(), ex_badwords.c_str(), ex_k, ex_m,
                                    ex_last ? 1 : 0, ex_out.c_str()));
    }
    if (subspace->parsed()) {
        ModelHandle m;
        if (int rc = open_model(ss_model, m)) return rc;
        return report(gloss_subspace(m.h, ss_cands.c_str(), ss_badwords.c_str(), ss_alpha, ss_eta,
                                     ss_center ? 1 : 0, ss_out.c_str()));
    }
    if (apply->parsed()) {
        ModelHandle m;
        if (int rc = open_model(ap_model, m)) return rc;
        return report(gloss_apply(m.h, ap_sub.c_str(), ap_l0, ap_lend, ap_out.c_str()));
    }
    if (control->parsed()) {
        ModelHandle m;
        if (int rc = open_model(ct_model, m)) return rc;
        return report(gloss_control(m.h, ct_sub.c_str(), ct_seed, ct_l0, ct_lend, ct_out.c_str()));
    }
    if (eval->parsed()) {
        ModelHandle m;
        if (int rc = open_model(ev_model, m)) return rc;
        return report(gloss_eval(m.h, ev_prompts.c_str(), ev_badwords.c_str(),
                                 ev_corpus.empty() ? nullptr : ev_corpus.c_str(), ev_steps,
                                 ev_out.c_str()));
    }
    if (intervene->parsed()) {
        ModelHandle m;
        if (int rc = open_model(iv_model, m)) return rc;
        return report(gloss_intervene(m.h, iv_pairs.c_str(), iv_prompts.c_str(),
                                      iv_badwords.c_str(), iv_mode.c_str(), iv_probe_layer,
                                      iv_pool, iv_factor, iv_xs.data(), iv_xs.size(), iv_steps,
                                      iv_out.c_str()));
    }
    if (shift->parsed()) {
        ModelHandle m;
        if (int rc = open_model(sh_model, m)) return rc;
        return report(gloss_shift(m.h, sh_sub.c_str(), sh_corpus.c_str(), sh_badwords.c_str(),
                                  sh_layer, sh_component, sh_m, sh_alphas.data(),
                                  sh_alphas.size(), sh_out.c_str()));
    }
    if (sweep->parsed()) {
        ModelHandle m;
        if (int rc = open_model(sw_model, m)) return rc;
        return report(gloss_sweep_l0(m.h, sw_sub.c_str(), sw_prompts.c_str(), sw_corpus.c_str(),
                                     sw_badwords.c_str(), sw_steps, sw_out.c_str()));
    }
    return 2;
}
