#include "fixture.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "common.hpp"
#include "tensorstore.hpp"

namespace gloss {

using nlohmann::json;

namespace {

// Alignment and gain constants. Tuned so that an unedited toxic prompt sits
// around badword_mass 0.5-0.7: saturated masses would hide the enhancement
// and suppression effects the intervention lab measures.
struct Gains {
    double bad_cos = 0.85;       // embedding alignment of bad tokens
    double strong_cos_noise = 0.08;
    double diffuse_cos = 0.28;   // stays under the 0.3 off-target bound
    double key_gain = 0.6;
    double a_strong = 0.012;     // strong units carry a minor share of the push
    double a_diffuse = 0.08;
    double early_scale = 0.4;    // layer-0 diffuse gain multiplier
    double noise_value = 0.05;   // per-element scale of off-target value rows
    double noise_key = 0.3;
    double attn_scale = 0.3;     // relative attention weight scale
    double attn_id = 0.3;        // identity mix in v/o so attention carries
                                 // the planted direction to later positions
    double pos_scale = 0.02;
    double base_comp = 0.75;      // shared base direction in neutral embeddings
};

std::vector<double> project_out(std::vector<double> v, std::span<const double> u) {
    double c = dot(v, u);
    for (size_t i = 0; i < v.size(); ++i) v[i] -= c * u[i];
    return v;
}

std::vector<double> rand_gauss(Rng& rng, int64_t d) {
    std::vector<double> v(static_cast<size_t>(d));
    for (auto& x : v) x = rng.gaussian();
    return v;
}

std::vector<double> rand_unit_orth(Rng& rng, int64_t d, std::span<const double> u1,
                                   std::span<const double> u2) {
    auto v = project_out(project_out(rand_gauss(rng, d), u1), u2);
    normalize(v);
    return v;
}

Tensor gauss_tensor(Rng& rng, std::vector<int64_t> shape, double scale) {
    Tensor t;
    t.shape = std::move(shape);
    t.data.resize(static_cast<size_t>(t.numel()));
    for (auto& x : t.data) x = static_cast<float>(scale * rng.gaussian());
    return t;
}

Tensor const_tensor(std::vector<int64_t> shape, float value) {
    Tensor t;
    t.shape = std::move(shape);
    t.data.assign(static_cast<size_t>(t.numel()), value);
    return t;
}

}  // namespace

PlantedFixture gen_planted_model(int64_t L, int64_t d, int64_t dm, int64_t vocab,
                                 int64_t n_bad, uint64_t seed) {
    if (d < 8) fail(ERR_CONFIG, "fixture: d_model must be >= 8");
    if (n_bad < 1 || n_bad >= vocab) fail(ERR_CONFIG, "fixture: need 1 <= n_bad < vocab");
    if (L < 2 || dm < 8) fail(ERR_CONFIG, "fixture: need n_layers >= 2 and d_ff >= 8");

    Gains g;
    Rng rng(seed);

    PlantedFixture fx;
    fx.seed = seed;
    fx.model.config = {L, d, dm, vocab, d % 4 == 0 ? 4 : 1, 64};
    fx.model.config.validate();

    fx.v_star = rand_gauss(rng, d);
    normalize(fx.v_star);
    std::vector<double> base = rand_unit_orth(rng, d, fx.v_star, std::vector<double>(static_cast<size_t>(d), 0.0));

    // bad token ids: random distinct subset
    std::vector<int64_t> ids(static_cast<size_t>(vocab));
    std::iota(ids.begin(), ids.end(), 0);
    for (int64_t i = vocab - 1; i > 0; --i)
        std::swap(ids[static_cast<size_t>(i)], ids[static_cast<size_t>(rng.below(static_cast<uint64_t>(i + 1)))]);
    ids.resize(static_cast<size_t>(n_bad));
    std::sort(ids.begin(), ids.end());
    for (int64_t id : ids) fx.bad_ids.ids.insert(id);
    for (int64_t id : ids) fx.bad_ids.sources.push_back(std::to_string(id));

    // embeddings: unit-norm rows
    Tensor E;
    E.shape = {vocab, d};
    E.data.resize(static_cast<size_t>(vocab * d));
    const double bad_orth = std::sqrt(1.0 - g.bad_cos * g.bad_cos);
    const double neu_orth = std::sqrt(1.0 - g.base_comp * g.base_comp);
    for (int64_t tok = 0; tok < vocab; ++tok) {
        auto u = rand_unit_orth(rng, d, fx.v_star, base);
        bool bad = fx.bad_ids.ids.count(tok) > 0;
        for (int64_t j = 0; j < d; ++j) {
            double e = bad ? g.bad_cos * fx.v_star[static_cast<size_t>(j)] + bad_orth * u[static_cast<size_t>(j)]
                           : g.base_comp * base[static_cast<size_t>(j)] + neu_orth * u[static_cast<size_t>(j)];
            E.data[static_cast<size_t>(tok * d + j)] = static_cast<float>(e);
        }
    }
    fx.model.entries["emb.E"] = std::move(E);

    Tensor pos = gauss_tensor(rng, {fx.model.config.max_seq, d}, g.pos_scale);
    // keep positional noise out of the planted direction
    for (int64_t t = 0; t < fx.model.config.max_seq; ++t) {
        double c = 0.0;
        for (int64_t j = 0; j < d; ++j) c += static_cast<double>(pos.at2(t, j)) * fx.v_star[static_cast<size_t>(j)];
        for (int64_t j = 0; j < d; ++j) pos.at2(t, j) -= static_cast<float>(c * fx.v_star[static_cast<size_t>(j)]);
    }
    fx.model.entries["emb.pos"] = std::move(pos);

    // planted layers: middle band
    for (int64_t l = std::max<int64_t>(1, L / 4); l <= L / 2; ++l) fx.planted_layers.push_back(l);

    const int64_t n_strong = std::min<int64_t>(12, dm / 4);
    int64_t n_diffuse = std::min<int64_t>(28, dm / 2);
    n_diffuse -= n_diffuse % 2;
    const int64_t n_early = std::min<int64_t>(8, dm / 4) & ~int64_t{1};

    const double attn_el = g.attn_scale / std::sqrt(static_cast<double>(d));
    const double keynoise_el = g.noise_key / std::sqrt(static_cast<double>(d));

    for (int64_t l = 0; l < L; ++l) {
        std::string p = "layer." + std::to_string(l) + ".";
        fx.model.entries[p + "ln1.g"] = const_tensor({d}, 1.0f);
        fx.model.entries[p + "ln1.b"] = const_tensor({d}, 0.0f);
        fx.model.entries[p + "ln2.g"] = const_tensor({d}, 1.0f);
        fx.model.entries[p + "ln2.b"] = const_tensor({d}, 0.0f);
        for (const char* w : {"q", "k"})
            fx.model.entries[p + "attn." + w] = gauss_tensor(rng, {d, d}, attn_el);
        for (const char* w : {"v", "o"}) {
            Tensor t = gauss_tensor(rng, {d, d}, attn_el * 0.2);
            for (int64_t j = 0; j < d; ++j)
                t.at2(j, j) += static_cast<float>(g.attn_id);
            fx.model.entries[p + "attn." + w] = std::move(t);
        }

        Tensor K, V;
        K.shape = {d, dm};
        K.data.assign(static_cast<size_t>(d * dm), 0.0f);
        V.shape = {dm, d};
        V.data.assign(static_cast<size_t>(dm * d), 0.0f);

        bool planted = std::find(fx.planted_layers.begin(), fx.planted_layers.end(), l) !=
                       fx.planted_layers.end();
        int64_t unit = 0;

        auto set_key_vstar = [&](int64_t u) {
            for (int64_t j = 0; j < d; ++j)
                K.data[static_cast<size_t>(j * dm + u)] =
                    static_cast<float>(g.key_gain * fx.v_star[static_cast<size_t>(j)]);
        };
        auto set_value = [&](int64_t u, std::span<const double> val) {
            for (int64_t j = 0; j < d; ++j)
                V.data[static_cast<size_t>(u * d + j)] = static_cast<float>(val[static_cast<size_t>(j)]);
        };
        auto add_diffuse_pair = [&](double gain) {
            auto u_orth = rand_unit_orth(rng, d, fx.v_star, base);
            const double oc = std::sqrt(1.0 - g.diffuse_cos * g.diffuse_cos);
            for (double sgn : {1.0, -1.0}) {
                std::vector<double> val(static_cast<size_t>(d));
                for (int64_t j = 0; j < d; ++j)
                    val[static_cast<size_t>(j)] = gain * (g.diffuse_cos * fx.v_star[static_cast<size_t>(j)] +
                                                          sgn * oc * u_orth[static_cast<size_t>(j)]);
                set_key_vstar(unit);
                set_value(unit, val);
                fx.planted_units.emplace_back(l, unit);
                ++unit;
            }
        };

        if (planted) {
            for (int64_t s = 0; s < n_strong; ++s) {
                auto eps = rand_unit_orth(rng, d, fx.v_star, base);
                std::vector<double> val(static_cast<size_t>(d));
                for (int64_t j = 0; j < d; ++j)
                    val[static_cast<size_t>(j)] = fx.v_star[static_cast<size_t>(j)] +
                                                  g.strong_cos_noise * eps[static_cast<size_t>(j)];
                normalize(val);
                for (auto& x : val) x *= g.a_strong;
                set_key_vstar(unit);
                set_value(unit, val);
                fx.planted_units.emplace_back(l, unit);
                ++unit;
            }
            for (int64_t pr = 0; pr < n_diffuse / 2; ++pr) add_diffuse_pair(g.a_diffuse);
        } else if (l == 0) {
            for (int64_t pr = 0; pr < n_early / 2; ++pr)
                add_diffuse_pair(g.a_diffuse * g.early_scale);
        }

        // remaining units: random keys and values orthogonal to v_star
        for (; unit < dm; ++unit) {
            std::vector<double> key(static_cast<size_t>(d));
            for (auto& x : key) x = keynoise_el * rng.gaussian();
            key = project_out(std::move(key), fx.v_star);
            for (int64_t j = 0; j < d; ++j)
                K.data[static_cast<size_t>(j * dm + unit)] = static_cast<float>(key[static_cast<size_t>(j)]);

            std::vector<double> val(static_cast<size_t>(d));
            for (auto& x : val) x = g.noise_value * rng.gaussian();
            val = project_out(std::move(val), fx.v_star);
            set_value(unit, val);
        }

        fx.model.entries[p + "ffn.K"] = std::move(K);
        fx.model.entries[p + "ffn.V"] = std::move(V);
    }
    fx.model.validate();

    // prompt construction
    std::vector<int64_t> bad(fx.bad_ids.ids.begin(), fx.bad_ids.ids.end());
    std::vector<int64_t> neutral;
    for (int64_t tok = 0; tok < vocab; ++tok)
        if (!fx.bad_ids.ids.count(tok)) neutral.push_back(tok);

    auto pick = [&](const std::vector<int64_t>& pool) {
        return pool[static_cast<size_t>(rng.below(pool.size()))];
    };
    auto toxic_prompt = [&](int64_t len) {
        std::vector<int64_t> seq(static_cast<size_t>(len));
        int64_t n_badpos = 0;
        for (int64_t t = 0; t + 1 < len; ++t) {
            bool use_bad = rng.uniform() < 0.6;
            n_badpos += use_bad ? 1 : 0;
            seq[static_cast<size_t>(t)] = use_bad ? pick(bad) : pick(neutral);
        }
        if (n_badpos == 0) seq[0] = pick(bad);
        seq[static_cast<size_t>(len - 1)] = pick(neutral);  // continuation starts neutral-side
        return seq;
    };
    auto neutral_seq = [&](int64_t len) {
        std::vector<int64_t> seq(static_cast<size_t>(len));
        for (auto& t : seq) t = pick(neutral);
        return seq;
    };

    const int64_t plen = 8;
    for (int i = 0; i < 16; ++i)
        fx.pairs.pairs.emplace_back(toxic_prompt(plen), neutral_seq(plen));
    for (int i = 0; i < 24; ++i) fx.toxic_prompts.push_back(toxic_prompt(plen));
    for (int i = 0; i < 30; ++i) fx.neutral_corpus.push_back(neutral_seq(12));
    // model-consistent continuations: a short trigger prompt plus a long
    // greedy tail, so the corpus becomes harder to predict exactly when the
    // machinery that produced it is cut out
    for (int i = 0; i < 24; ++i) {
        std::vector<int64_t> seq = {pick(bad), pick(bad), pick(bad)};
        auto cont = generate_greedy(fx.model, seq, 9);
        seq.insert(seq.end(), cont.begin(), cont.end());
        fx.mixed_corpus.push_back(std::move(seq));
    }
    return fx;
}

void write_fixture(const PlantedFixture& fx, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ERR_DATA, "cannot create fixture directory: " + dir);

    save_checkpoint(fx.model, dir + "/model.ckpt");
    save_prompt_pairs(fx.pairs, dir + "/pairs.jsonl");
    save_corpus(fx.toxic_prompts, dir + "/prompts_toxic.jsonl");
    save_corpus(fx.neutral_corpus, dir + "/corpus_neutral.jsonl");
    save_corpus(fx.mixed_corpus, dir + "/corpus_mixed.jsonl");

    std::ofstream bw(dir + "/badwords.txt", std::ios::trunc);
    bw << "# planted bad token ids\n";
    for (int64_t id : fx.bad_ids.ids) bw << id << "\n";

    json planted_units = json::array();
    for (auto [l, u] : fx.planted_units) planted_units.push_back({l, u});
    json truth = {
        {"seed", fx.seed},
        {"v_star", fx.v_star},
        {"bad_ids", std::vector<int64_t>(fx.bad_ids.ids.begin(), fx.bad_ids.ids.end())},
        {"planted_layers", fx.planted_layers},
        {"planted_units", planted_units},
        {"config",
         {{"n_layers", fx.model.config.n_layers},
          {"d_model", fx.model.config.d_model},
          {"d_ff", fx.model.config.d_ff},
          {"vocab_size", fx.model.config.vocab_size}}},
    };
    std::ofstream tf(dir + "/truth.json", std::ios::trunc);
    tf << truth.dump(2) << "\n";
}

}  // namespace gloss
