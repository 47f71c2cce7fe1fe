#include "model.hpp"

#include <cmath>

#include "common.hpp"

namespace gloss {

namespace {
constexpr double kLnEps = 1e-5;

void layer_norm(std::span<const double> x, const Tensor& g, const Tensor& b,
                std::span<double> out) {
    const size_t d = x.size();
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= static_cast<double>(d);
    double inv = 1.0 / std::sqrt(var + kLnEps);
    for (size_t i = 0; i < d; ++i)
        out[i] = (x[i] - mu) * inv * static_cast<double>(g.data[i]) + static_cast<double>(b.data[i]);
}

// y = x . W for a [din, dout] weight tensor.
void vecmat(std::span<const double> x, const Tensor& W, std::span<double> y) {
    const int64_t din = W.shape[0], dout = W.shape[1];
    for (int64_t j = 0; j < dout; ++j) y[static_cast<size_t>(j)] = 0.0;
    for (int64_t i = 0; i < din; ++i) {
        double xi = x[static_cast<size_t>(i)];
        if (xi == 0.0) continue;
        const float* wr = W.data.data() + i * dout;
        for (int64_t j = 0; j < dout; ++j) y[static_cast<size_t>(j)] += xi * static_cast<double>(wr[j]);
    }
}

struct SpecPlan {
    // per (layer, unit) multiplicative factor; empty means untouched
    std::vector<std::vector<double>> scale;       // enhance/suppress
    std::vector<char> reverse_layer;              // reverse modes
    bool reverse_toward = true;
    const InterventionSpec* spec = nullptr;
};

SpecPlan build_plan(const TensorMap& model, const InterventionSpec* spec) {
    SpecPlan plan;
    plan.spec = spec;
    if (!spec || spec->mode == InterventionSpec::Mode::none) return plan;
    const int64_t L = model.config.n_layers, dm = model.config.d_ff;

    auto check_target = [&](int64_t layer, int64_t unit) {
        if (layer < 0 || layer >= L) fail(ERR_DATA, "intervention target layer out of range");
        if (unit < 0 || unit >= dm) fail(ERR_DATA, "intervention target unit out of range");
    };

    switch (spec->mode) {
        case InterventionSpec::Mode::enhance: {
            if (!std::isfinite(spec->factor)) fail(ERR_DATA, "enhance factor must be finite");
            plan.scale.assign(static_cast<size_t>(L), {});
            for (auto [layer, unit] : spec->targets) {
                check_target(layer, unit);
                auto& s = plan.scale[static_cast<size_t>(layer)];
                if (s.empty()) s.assign(static_cast<size_t>(dm), 1.0);
                s[static_cast<size_t>(unit)] *= spec->factor;
            }
            break;
        }
        case InterventionSpec::Mode::suppress: {
            if (spec->proportion < 0.0 || spec->proportion > 1.0)
                fail(ERR_DATA, "suppress proportion outside [0,1]");
            size_t n = static_cast<size_t>(
                std::ceil(spec->proportion * static_cast<double>(spec->targets.size())));
            plan.scale.assign(static_cast<size_t>(L), {});
            for (size_t i = 0; i < n && i < spec->targets.size(); ++i) {
                auto [layer, unit] = spec->targets[i];
                check_target(layer, unit);
                auto& s = plan.scale[static_cast<size_t>(layer)];
                if (s.empty()) s.assign(static_cast<size_t>(dm), 1.0);
                s[static_cast<size_t>(unit)] = 0.0;
            }
            break;
        }
        case InterventionSpec::Mode::reverse_toward:
        case InterventionSpec::Mode::reverse_away: {
            if (spec->probe.size() != static_cast<size_t>(model.config.d_model))
                fail(ERR_DATA, "reverse intervention requires a d-dimensional probe");
            plan.reverse_layer.assign(static_cast<size_t>(L), 0);
            for (auto [layer, unit] : spec->targets) {
                (void)unit;
                if (layer < 0 || layer >= L) fail(ERR_DATA, "intervention target layer out of range");
                plan.reverse_layer[static_cast<size_t>(layer)] = 1;
            }
            plan.reverse_toward = spec->mode == InterventionSpec::Mode::reverse_toward;
            break;
        }
        default:
            break;
    }
    return plan;
}

void apply_plan(const SpecPlan& plan, const TensorMap& model, int64_t layer,
                std::span<double> m) {
    if (!plan.spec || plan.spec->mode == InterventionSpec::Mode::none) return;
    if (!plan.scale.empty()) {
        const auto& s = plan.scale[static_cast<size_t>(layer)];
        if (!s.empty())
            for (size_t i = 0; i < m.size(); ++i) m[i] *= s[i];
        return;
    }
    if (!plan.reverse_layer.empty() && plan.reverse_layer[static_cast<size_t>(layer)]) {
        const Tensor& V = model.get("layer." + std::to_string(layer) + ".ffn.V");
        const int64_t d = model.config.d_model;
        for (size_t i = 0; i < m.size(); ++i) {
            double c = 0.0;
            const float* v = V.data.data() + static_cast<int64_t>(i) * d;
            for (int64_t j = 0; j < d; ++j) c += static_cast<double>(v[j]) * plan.spec->probe[static_cast<size_t>(j)];
            double sgn = c >= 0.0 ? 1.0 : -1.0;
            if (!plan.reverse_toward) sgn = -sgn;
            m[i] = sgn * std::abs(m[i]);
        }
    }
}

}  // namespace

bool InterventionSpec::is_noop() const {
    if (mode == Mode::none) return true;
    if (targets.empty()) return true;
    if (mode == Mode::enhance && factor == 1.0) return true;
    if (mode == Mode::suppress && proportion == 0.0) return true;
    return false;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

std::vector<double> softmax(std::span<const double> logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        z += p[i];
    }
    for (auto& v : p) v /= z;
    return p;
}

ForwardResult forward(const TensorMap& model, std::span<const int64_t> tokens, bool capture,
                      const InterventionSpec* spec) {
    const auto& cfg = model.config;
    const int64_t T = static_cast<int64_t>(tokens.size());
    const int64_t d = cfg.d_model, dm = cfg.d_ff, H = cfg.n_heads, dh = d / H;
    if (T < 1) fail(ERR_DATA, "empty token sequence");
    if (T > cfg.max_seq) fail(ERR_DATA, "sequence longer than max_seq");
    for (int64_t t : tokens)
        if (t < 0 || t >= cfg.vocab_size) fail(ERR_DATA, "token id out of range");

    SpecPlan plan = build_plan(model, (spec && !spec->is_noop()) ? spec : nullptr);
    // A noop spec must still produce bitwise-identical logits; use the raw
    // spec only when it actually changes something.
    const InterventionSpec* eff = (spec && !spec->is_noop()) ? spec : nullptr;
    plan.spec = eff;

    const Tensor& E = model.get("emb.E");
    const Tensor& pos = model.get("emb.pos");

    Mat x(T, d);
    for (int64_t t = 0; t < T; ++t)
        for (int64_t j = 0; j < d; ++j)
            x.at(t, j) = static_cast<double>(E.at2(tokens[static_cast<size_t>(t)], j)) +
                         static_cast<double>(pos.at2(t, j));

    ForwardResult res;
    if (capture) res.trace.resize(static_cast<size_t>(cfg.n_layers));

    std::vector<double> buf(static_cast<size_t>(d)), q(static_cast<size_t>(d)),
        k(static_cast<size_t>(d)), v(static_cast<size_t>(d));
    Mat Q(T, d), K(T, d), Vm(T, d), attn(T, d);
    std::vector<double> m(static_cast<size_t>(dm));

    for (int64_t layer = 0; layer < cfg.n_layers; ++layer) {
        std::string p = "layer." + std::to_string(layer) + ".";
        const Tensor& ln1g = model.get(p + "ln1.g");
        const Tensor& ln1b = model.get(p + "ln1.b");
        const Tensor& Wq = model.get(p + "attn.q");
        const Tensor& Wk = model.get(p + "attn.k");
        const Tensor& Wv = model.get(p + "attn.v");
        const Tensor& Wo = model.get(p + "attn.o");
        const Tensor& ln2g = model.get(p + "ln2.g");
        const Tensor& ln2b = model.get(p + "ln2.b");
        const Tensor& Wffk = model.get(p + "ffn.K");
        const Tensor& Wffv = model.get(p + "ffn.V");

        // attention sublayer
        for (int64_t t = 0; t < T; ++t) {
            layer_norm(x.row(t), ln1g, ln1b, buf);
            vecmat(buf, Wq, Q.row(t));
            vecmat(buf, Wk, K.row(t));
            vecmat(buf, Wv, Vm.row(t));
        }
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        std::vector<double> scores(static_cast<size_t>(T));
        Mat mixed(T, d);
        for (int64_t h = 0; h < H; ++h) {
            const int64_t off = h * dh;
            for (int64_t t = 0; t < T; ++t) {
                for (int64_t s = 0; s <= t; ++s) {
                    double sc = 0.0;
                    for (int64_t j = 0; j < dh; ++j) sc += Q.at(t, off + j) * K.at(s, off + j);
                    scores[static_cast<size_t>(s)] = sc * scale;
                }
                auto w = softmax({scores.data(), static_cast<size_t>(t + 1)});
                for (int64_t j = 0; j < dh; ++j) {
                    double acc = 0.0;
                    for (int64_t s = 0; s <= t; ++s) acc += w[static_cast<size_t>(s)] * Vm.at(s, off + j);
                    mixed.at(t, off + j) = acc;
                }
            }
        }
        for (int64_t t = 0; t < T; ++t) {
            vecmat(mixed.row(t), Wo, attn.row(t));
            for (int64_t j = 0; j < d; ++j) x.at(t, j) += attn.at(t, j);
        }

        // FFN sublayer
        LayerTrace* tr = capture ? &res.trace[static_cast<size_t>(layer)] : nullptr;
        if (tr) {
            tr->hidden = Mat(T, d);
            tr->coeffs = Mat(T, dm);
            tr->ffn_out = Mat(T, d);
        }
        for (int64_t t = 0; t < T; ++t) {
            layer_norm(x.row(t), ln2g, ln2b, buf);
            vecmat(buf, Wffk, m);
            for (auto& mi : m) mi = gelu(mi);
            apply_plan(plan, model, layer, m);

            std::vector<double> o(static_cast<size_t>(d), 0.0);
            for (int64_t i = 0; i < dm; ++i) {
                double mi = m[static_cast<size_t>(i)];
                if (mi == 0.0) continue;
                const float* vr = Wffv.data.data() + i * d;
                for (int64_t j = 0; j < d; ++j) o[static_cast<size_t>(j)] += mi * static_cast<double>(vr[j]);
            }
            if (tr) {
                std::copy(buf.begin(), buf.end(), tr->hidden.row(t).begin());
                std::copy(m.begin(), m.end(), tr->coeffs.row(t).begin());
                std::copy(o.begin(), o.end(), tr->ffn_out.row(t).begin());
            }
            for (int64_t j = 0; j < d; ++j) x.at(t, j) += o[static_cast<size_t>(j)];
        }
    }

    // tied output embedding, no final layer norm
    res.logits = Mat(T, cfg.vocab_size);
    for (int64_t t = 0; t < T; ++t)
        for (int64_t tok = 0; tok < cfg.vocab_size; ++tok) {
            double s = 0.0;
            const float* er = E.data.data() + tok * d;
            for (int64_t j = 0; j < d; ++j) s += static_cast<double>(er[j]) * x.at(t, j);
            res.logits.at(t, tok) = s;
        }
    return res;
}

std::pair<std::vector<double>, std::vector<double>> ffn_apply(const TensorMap& model,
                                                              int64_t layer,
                                                              std::span<const double> x) {
    const auto& cfg = model.config;
    if (layer < 0 || layer >= cfg.n_layers) fail(ERR_DATA, "ffn_apply: layer out of range");
    const Tensor& Wk = model.get("layer." + std::to_string(layer) + ".ffn.K");
    const Tensor& Wv = model.get("layer." + std::to_string(layer) + ".ffn.V");

    std::vector<double> m(static_cast<size_t>(cfg.d_ff));
    vecmat(x, Wk, m);
    for (auto& mi : m) mi = gelu(mi);

    std::vector<double> o(static_cast<size_t>(cfg.d_model), 0.0);
    for (int64_t i = 0; i < cfg.d_ff; ++i) {
        double mi = m[static_cast<size_t>(i)];
        if (mi == 0.0) continue;
        const float* vr = Wv.data.data() + i * cfg.d_model;
        for (int64_t j = 0; j < cfg.d_model; ++j) o[static_cast<size_t>(j)] += mi * static_cast<double>(vr[j]);
    }
    return {o, m};
}

std::vector<double> next_token_dist(const TensorMap& model, std::span<const int64_t> tokens,
                                    const InterventionSpec* spec) {
    ForwardResult r = forward(model, tokens, false, spec);
    return softmax(r.logits.row(r.logits.rows - 1));
}

}  // namespace gloss
