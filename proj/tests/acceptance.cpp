// End-to-end acceptance harness: one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/common.hpp"
#include "core/eval.hpp"
#include "core/fixture.hpp"
#include "core/interventions.hpp"
#include "core/pipeline.hpp"
#include "core/surgery.hpp"
#include "core/tensorstore.hpp"
#include "oracles.hpp"

using namespace gloss;

namespace {

int g_failures = 0;

void report(int idx, bool ok, const std::string& detail) {
    std::printf("%s criterion-%d: %s\n", ok ? "PASS" : "FAIL", idx, detail.c_str());
    if (!ok) ++g_failures;
}

double now_s() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

Mat random_rows(Rng& rng, int64_t r, int64_t c) {
    Mat m(r, c);
    for (auto& x : m.a) x = rng.gaussian();
    return m;
}

// extract -> rank -> subspace on a fixture, pure in-memory
GlobalSubspace recover_subspace(const PlantedFixture& fx, int64_t k, int64_t m) {
    auto means = collect_ffn_means(fx.model, fx.pairs);
    std::vector<DirectionCandidate> cands;
    const Tensor& E = fx.model.get("emb.E");
    for (int64_t l = 0; l < fx.model.config.n_layers; ++l) {
        auto cm = build_contrastive(means.pos[size_t(l)], means.neg[size_t(l)], l);
        std::vector<DirectionCandidate> layer_cands;
        try {
            layer_cands = extract_candidates(cm, k);
        } catch (const Error&) {
            continue;
        }
        for (auto& c : layer_cands) {
            c.tox = tox_score(c.vector, E, fx.bad_ids, m).score;
            cands.push_back(std::move(c));
        }
    }
    Selection sel = select_high(cands, 1.0);
    if (sel.empty()) fail(ERR_NUMERIC, "empty selection");
    return build_global_subspace(sel, 0.8, E, fx.bad_ids, m);
}

double mass_of(const TensorMap& model, const PlantedFixture& fx) {
    return badword_mass(model, fx.toxic_prompts, fx.bad_ids, 10).mass;
}

void criterion_1() {
    double t0 = now_s();
    Rng rng(101);
    bool ok = true;
    std::string why;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        int64_t r = 1 + int64_t(rng.below(8));
        int64_t d = std::max<int64_t>(r + 2, 8 + int64_t(rng.below(57)));
        Basis b = orthonormalize(random_rows(rng, r, d)).basis;
        if (b.rank() != r) { ok = false; why = "rank collapse"; break; }
        Mat P = projector(b);
        Mat P2 = matmul(P, P);
        double inf = 0.0, trace = 0.0;
        for (int64_t i = 0; i < d; ++i) {
            trace += P.at(i, i);
            for (int64_t j = 0; j < d; ++j) inf = std::max(inf, std::abs(P2.at(i, j) - P.at(i, j)));
        }
        if (inf > 1e-5) { ok = false; why = "||P^2-P|| = " + std::to_string(inf); break; }
        if (std::abs(trace - double(r)) > 1e-4) { ok = false; why = "trace(P) off"; break; }
        for (int64_t i = 0; i < r; ++i) {
            std::vector<double> v(b.vectors.row(i).begin(), b.vectors.row(i).end());
            complement_apply_row(b, v);
            if (norm(v) > 1e-5) { ok = false; why = "(I-P)d_i not zero"; break; }
        }
    }

    // double application of the weight edit equals single application
    double max_dd = 0.0;
    if (ok) {
        PlantedFixture fx = gen_planted_model(4, 32, 64, 100, 10, 1);
        Rng r2(7);
        GlobalSubspace sub;
        sub.basis = orthonormalize(random_rows(r2, 2, 32)).basis;
        EditPlan plan{1, 3};
        TensorMap once = apply_gloss(fx.model, sub, plan);
        TensorMap twice = apply_gloss(once, sub, plan);
        for (int64_t l = 1; l <= 3; ++l) {
            const auto& a = once.get("layer." + std::to_string(l) + ".ffn.V").data;
            const auto& b = twice.get("layer." + std::to_string(l) + ".ffn.V").data;
            for (size_t i = 0; i < a.size(); ++i)
                max_dd = std::max(max_dd, std::abs(double(a[i]) - double(b[i])));
        }
        if (max_dd > 1e-6) { ok = false; why = "double apply drift " + std::to_string(max_dd); }
    }
    double dt = now_s() - t0;
    if (ok && dt >= 5.0) { ok = false; why = "too slow"; }
    report(1, ok,
           ok ? "projector algebra on 100 bases, double-apply drift " + std::to_string(max_dd) +
                    ", " + std::to_string(dt) + "s"
              : why);
}

void criterion_2() {
    Rng rng(202);
    bool ok = true;
    std::string why;
    for (int trial = 0; trial < 200 && ok; ++trial) {
        int64_t n = 2 + int64_t(rng.below(15)), d = 2 + int64_t(rng.below(15));
        Mat M = random_rows(rng, n, d);
        int64_t k = std::min(n, d);
        auto impl = top_right_singular(M, k);
        auto orc = oracle::right_singular_oracle(M);
        double s1 = std::max(impl[0].sigma, 1.0);
        for (int64_t i = 0; i < k; ++i) {
            if (std::abs(impl[size_t(i)].sigma - orc.values[size_t(i)]) > 1e-6 * s1) {
                ok = false;
                why = "sigma mismatch at trial " + std::to_string(trial);
                break;
            }
            if (impl[size_t(i)].degenerate) continue;
            double gap_prev = i == 0 ? 1.0 : orc.values[size_t(i - 1)] - orc.values[size_t(i)];
            double gap_next = i + 1 < int64_t(orc.values.size())
                                  ? orc.values[size_t(i)] - orc.values[size_t(i + 1)]
                                  : 1.0;
            if (std::min(gap_prev, gap_next) < 1e-4 * s1) continue;  // near-degenerate pair
            if (1.0 - oracle::cos_abs(impl[size_t(i)].v, orc.vectors[size_t(i)]) > 1e-6) {
                ok = false;
                why = "vector mismatch at trial " + std::to_string(trial);
                break;
            }
        }
    }

    // PCA rank selection equals the direct cumulative-variance count
    for (int trial = 0; trial < 40 && ok; ++trial) {
        Mat rows = random_rows(rng, 3 + int64_t(rng.below(8)), 3 + int64_t(rng.below(8)));
        double eta = 0.2 + 0.79 * rng.uniform();
        Basis b = principal_components(rows, eta);
        auto orc = oracle::right_singular_oracle(rows);
        double total = 0;
        for (double s : orc.values) total += s * s;
        int64_t want = 0;
        double cum = 0;
        for (double s : orc.values) {
            ++want;
            cum += s * s;
            if (cum / total >= eta) break;
        }
        if (b.rank() != want) {
            ok = false;
            why = "pca rank " + std::to_string(b.rank()) + " vs " + std::to_string(want);
        }
    }
    report(2, ok, ok ? "200 SVD oracle matches + 40 PCA rank matches" : why);
}

void criterion_3() {
    const int64_t vocab = 300;
    Tensor E;
    E.shape = {vocab, 2};
    E.data.resize(size_t(vocab * 2));
    for (int64_t i = 0; i < vocab; ++i) {
        E.at2(i, 0) = float(vocab - i);
        E.at2(i, 1) = float(i % 5);
    }
    std::vector<double> v = {1.0, 0.0};
    auto bad = [](std::initializer_list<int64_t> ids) {
        BadWordsList b;
        b.ids.insert(ids.begin(), ids.end());
        return b;
    };

    bool ok = true;
    std::string why;
    // middle-of-vocab bad id: outside the top-100 of both orientations
    if (tox_score(v, E, bad({150}), 100).score != 0.0) { ok = false; why = "expected 0"; }
    BadWordsList top100;
    for (int64_t i = 0; i < 100; ++i) top100.ids.insert(i);
    if (ok && tox_score(v, E, top100, 100).score != 1.0) { ok = false; why = "expected 1"; }
    if (ok && tox_score(v, E, bad({0, 1, 2, 3, 4, 5, 6}), 100).score != 0.07) {
        ok = false;
        why = "expected 0.07";
    }
    if (ok) {
        std::vector<double> neg = {-1.0, 0.0}, twice = {2.0, 0.0};
        BadWordsList B = bad({0, 1, 2, 250});
        double s = tox_score(v, E, B, 100).score;
        if (tox_score(neg, E, B, 100).score != s) { ok = false; why = "orientation variant"; }
        if (ok && tox_score(twice, E, B, 100).score != s) { ok = false; why = "scale variant"; }
    }
    report(3, ok, ok ? "exact 0 / 1.0 / 0.07, orientation- and scale-invariant" : why);
}

struct SeedOutcome {
    double cos = 0.0;
    int64_t r = 0;
    double mass_base = 0.0, mass_gloss = 0.0, mass_ctrl = 0.0;
    double ppl_base = 0.0, ppl_gloss = 0.0;
};

std::vector<SeedOutcome> run_seeds() {
    std::vector<SeedOutcome> out;
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        PlantedFixture fx = gen_planted_model(4, 32, 64, 100, 10, seed);
        SeedOutcome so;
        GlobalSubspace sub = recover_subspace(fx, 4, 10);
        so.r = sub.rank();
        so.cos = oracle::cos_abs(sub.basis.vectors.row(0), fx.v_star);

        EditPlan plan{fx.planted_layers.front(), fx.model.config.n_layers - 1};
        TensorMap edited = apply_gloss(fx.model, sub, plan);
        GlobalSubspace ctrl = random_control_subspace(sub, seed);
        TensorMap controlled = apply_gloss(fx.model, ctrl, plan);

        so.mass_base = mass_of(fx.model, fx);
        so.mass_gloss = mass_of(edited, fx);
        so.mass_ctrl = mass_of(controlled, fx);
        so.ppl_base = perplexity(fx.model, fx.neutral_corpus);
        so.ppl_gloss = perplexity(edited, fx.neutral_corpus);
        out.push_back(so);
    }
    return out;
}

void criterion_4(const std::vector<SeedOutcome>& seeds, double dt) {
    int hits = 0;
    double worst = 1.0;
    for (const auto& s : seeds) {
        if (s.cos >= 0.9) ++hits;
        worst = std::min(worst, s.cos);
    }
    bool ok = hits >= 9 && dt < 60.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "|cos| >= 0.9 in %d/10 seeds (worst %.3f), %.1fs", hits,
                  worst, dt);
    report(4, ok, buf);
}

void criterion_5(const std::vector<SeedOutcome>& seeds) {
    const auto& s = seeds[0];
    double drop = 1.0 - s.mass_gloss / s.mass_base;
    double ppl_up = s.ppl_gloss / s.ppl_base - 1.0;
    bool ok = drop >= 0.5 && ppl_up <= 0.10;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "mass %.3f -> %.3f (-%.0f%%), neutral ppl %.2f -> %.2f (%+.1f%%)", s.mass_base,
                  s.mass_gloss, drop * 100.0, s.ppl_base, s.ppl_gloss, ppl_up * 100.0);
    report(5, ok, buf);
}

void criterion_6(const std::vector<SeedOutcome>& seeds) {
    int hits = 0;
    for (const auto& s : seeds) {
        double ctrl_change = std::abs(s.mass_ctrl / s.mass_base - 1.0);
        double gloss_drop = 1.0 - s.mass_gloss / s.mass_base;
        if (ctrl_change < 0.10 && gloss_drop >= 0.5) ++hits;
    }
    bool ok = hits >= 9;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "control <10%% change and edit >=50%% drop in %d/10 seeds (seed1 ctrl %.3f vs "
                  "base %.3f)",
                  hits, seeds[0].mass_ctrl, seeds[0].mass_base);
    report(6, ok, buf);
}

void criterion_7() {
    PlantedFixture fx = gen_planted_model(4, 32, 64, 100, 10, 1);
    double base = mass_of(fx.model, fx);

    ProbeVector probe = build_probe(fx.model, fx.pairs, 2);
    auto ranked = rank_value_vectors(fx.model, probe);

    auto mass_spec = [&](const InterventionSpec& spec) {
        double total = 0;
        for (const auto& prompt : fx.toxic_prompts) {
            std::vector<int64_t> ctx = prompt;
            for (int64_t step = 0; step < 10; ++step) {
                auto p = next_token_dist(fx.model, ctx, &spec);
                double m = 0;
                for (int64_t id : fx.bad_ids.ids) m += p[size_t(id)];
                total += m;
                int64_t arg = 0;
                for (size_t i = 1; i < p.size(); ++i)
                    if (p[i] > p[size_t(arg)]) arg = int64_t(i);
                ctx.push_back(arg);
            }
        }
        return total / double(fx.toxic_prompts.size() * 10);
    };

    // (a) enhance top-x units x10
    std::vector<double> enh;
    for (int64_t x : {1, 5, 20}) {
        InterventionSpec spec;
        spec.mode = InterventionSpec::Mode::enhance;
        spec.factor = 10.0;
        for (int64_t i = 0; i < x; ++i)
            spec.targets.emplace_back(ranked[size_t(i)].layer, ranked[size_t(i)].unit);
        enh.push_back(mass_spec(spec));
    }
    int inversions = 0;
    for (size_t i = 1; i < enh.size(); ++i)
        if (enh[i] <= enh[i - 1]) ++inversions;
    bool ok_a = inversions <= 1 && enh.back() > base;

    // (b) suppress the top-20 toxic pool entirely
    InterventionSpec sup;
    sup.mode = InterventionSpec::Mode::suppress;
    sup.proportion = 1.0;
    for (int64_t i = 0; i < 20; ++i)
        sup.targets.emplace_back(ranked[size_t(i)].layer, ranked[size_t(i)].unit);
    double sup_mass = mass_spec(sup);
    double sup_drop = 1.0 - sup_mass / base;
    bool ok_b = sup_drop < 0.30;

    // (c) reverse toward vs away across all layers
    InterventionSpec toward;
    toward.mode = InterventionSpec::Mode::reverse_toward;
    toward.probe = probe.direction;
    for (int64_t l = 0; l < 4; ++l) toward.targets.emplace_back(l, 0);
    InterventionSpec away = toward;
    away.mode = InterventionSpec::Mode::reverse_away;
    double m_toward = mass_spec(toward), m_away = mass_spec(away);
    bool ok_c = m_toward >= 5.0 * m_away;

    bool ok = ok_a && ok_b && ok_c;
    char buf[240];
    std::snprintf(buf, sizeof(buf),
                  "enhance {1,5,20} -> {%.3f,%.3f,%.3f} (base %.3f, %d inversions); suppress "
                  "drop %.0f%%; toward %.3f vs away %.3f",
                  enh[0], enh[1], enh[2], base, inversions, sup_drop * 100.0, m_toward, m_away);
    report(7, ok, buf);
}

void criterion_8() {
    PlantedFixture fx = gen_planted_model(4, 32, 64, 100, 10, 1);
    GlobalSubspace sub = recover_subspace(fx, 4, 10);
    std::vector<double> ppl;
    for (int64_t l0 = 0; l0 < 4; ++l0) {
        TensorMap edited = apply_gloss(fx.model, sub, EditPlan{l0, 3});
        ppl.push_back(perplexity(edited, fx.mixed_corpus));
    }
    bool ok = true;
    for (size_t i = 1; i < ppl.size(); ++i)
        if (ppl[0] <= ppl[i]) ok = false;
    char buf[200];
    std::snprintf(buf, sizeof(buf), "mixed-corpus ppl by start layer: %.2f %.2f %.2f %.2f",
                  ppl[0], ppl[1], ppl[2], ppl[3]);
    report(8, ok, buf);
}

void criterion_9(const std::vector<SeedOutcome>& seeds) {
    bool ok = true;
    int64_t worst_r = 0;
    for (const auto& s : seeds) worst_r = std::max(worst_r, s.r);
    if (worst_r > 4) ok = false;
    double ratio = double(worst_r) / 32.0;
    if (ratio > 0.125) ok = false;
    // the >2% compactness warning must fire for a wide subspace
    GlobalSubspace wide;
    wide.basis.vectors = Mat(2, 32);
    bool flags = wide.ratio() > 0.02;
    if (!flags) ok = false;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "max r = %lld (ratio %.4f <= 0.125), wide-ratio flag works",
                  static_cast<long long>(worst_r), ratio);
    report(9, ok, buf);
}

void criterion_10() {
    namespace fs = std::filesystem;
    auto root = fs::temp_directory_path() / "gloss_acceptance";
    fs::remove_all(root);
    bool ok = true;
    std::string why;
    try {
        std::vector<std::string> stage_files = {"candidates.json", "subspace.json",
                                                "edited.ckpt", "report.json"};
        std::vector<std::string> hashes[2];
        for (int run = 0; run < 2; ++run) {
            auto dir = root / ("run" + std::to_string(run));
            fs::create_directories(dir);
            run_fixture_gen(4, 32, 64, 100, 10, 1, (dir / "fx").string());
            TensorMap model = load_checkpoint((dir / "fx/model.ckpt").string());
            ExtractParams ep;
            ep.k = 4;
            ep.m = 10;
            run_extract(model, (dir / "fx/pairs.jsonl").string(),
                        (dir / "fx/badwords.txt").string(), ep,
                        (dir / "candidates.json").string());
            run_subspace(model, (dir / "candidates.json").string(),
                         (dir / "fx/badwords.txt").string(), SubspaceParams{},
                         (dir / "subspace.json").string());
            run_apply(model, (dir / "subspace.json").string(), 1, 3,
                      (dir / "edited.ckpt").string());
            TensorMap edited = load_checkpoint((dir / "edited.ckpt").string());
            run_eval(edited, (dir / "fx/prompts_toxic.jsonl").string(),
                     (dir / "fx/badwords.txt").string(),
                     (dir / "fx/corpus_neutral.jsonl").string(), 10,
                     (dir / "report.json").string());
            for (const auto& f : stage_files) {
                hashes[run].push_back(file_hash((dir / f).string()));
                // each manifest's recorded output hash matches the file on disk
                std::ifstream mfs((dir / (f + ".manifest.json")).string());
                auto mf = nlohmann::json::parse(mfs);
                if (mf.at("output").at((dir / f).string()) != hashes[run].back()) {
                    ok = false;
                    why = "manifest hash mismatch for " + f;
                }
            }
        }
        if (ok && hashes[0] != hashes[1]) { ok = false; why = "reruns differ"; }

        if (ok) {
            TensorMap m = load_checkpoint((root / "run0/edited.ckpt").string());
            auto b1 = serialize_checkpoint(m);
            auto b2 = serialize_checkpoint(deserialize_checkpoint(b1));
            if (b1 != b2) { ok = false; why = "round trip not bit-exact"; }
        }
    } catch (const std::exception& e) {
        ok = false;
        why = e.what();
    }
    fs::remove_all(root);
    report(10, ok, ok ? "stage outputs byte-identical across reruns, manifests verified" : why);
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    double t0 = now_s();
    std::vector<SeedOutcome> seeds;
    try {
        seeds = run_seeds();
    } catch (const std::exception& e) {
        std::printf("FAIL criterion-4: %s\n", e.what());
        std::printf("FAIL criterion-5: seed sweep aborted\n");
        std::printf("FAIL criterion-6: seed sweep aborted\n");
        std::printf("FAIL criterion-9: seed sweep aborted\n");
        g_failures += 4;
    }
    if (!seeds.empty()) {
        criterion_4(seeds, now_s() - t0);
        criterion_5(seeds);
        criterion_6(seeds);
    }
    criterion_7();
    criterion_8();
    if (!seeds.empty()) criterion_9(seeds);
    criterion_10();
    return g_failures == 0 ? 0 : 1;
}
