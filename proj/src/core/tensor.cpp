#include "tensor.hpp"

#include <cmath>

#include "common.hpp"

namespace gloss {

Mat Tensor::to_mat() const {
    if (shape.size() != 2) fail(ERR_DATA, "to_mat: tensor is not 2-d");
    Mat m(shape[0], shape[1]);
    for (size_t i = 0; i < data.size(); ++i) m.a[i] = static_cast<double>(data[i]);
    return m;
}

Tensor Tensor::from_mat(const Mat& m) {
    Tensor t;
    t.shape = {m.rows, m.cols};
    t.data.resize(m.a.size());
    for (size_t i = 0; i < m.a.size(); ++i) t.data[i] = static_cast<float>(m.a[i]);
    return t;
}

void ModelConfig::validate() const {
    if (n_layers < 1) fail(ERR_DATA, "config: n_layers must be >= 1");
    if (d_model < 1 || d_ff < 1) fail(ERR_DATA, "config: d_ff must be >= 1");
    if (vocab_size < 2) fail(ERR_DATA, "config: vocab_size must be >= 2");
    if (n_heads < 1 || d_model % n_heads != 0)
        fail(ERR_DATA, "config: d_model must be divisible by n_heads");
    if (max_seq < 1) fail(ERR_DATA, "config: max_seq must be >= 1");
}

std::vector<std::pair<std::string, std::vector<int64_t>>> required_tensors(const ModelConfig& cfg) {
    std::vector<std::pair<std::string, std::vector<int64_t>>> req;
    req.emplace_back("emb.E", std::vector<int64_t>{cfg.vocab_size, cfg.d_model});
    req.emplace_back("emb.pos", std::vector<int64_t>{cfg.max_seq, cfg.d_model});
    for (int64_t i = 0; i < cfg.n_layers; ++i) {
        std::string p = "layer." + std::to_string(i) + ".";
        req.emplace_back(p + "ln1.g", std::vector<int64_t>{cfg.d_model});
        req.emplace_back(p + "ln1.b", std::vector<int64_t>{cfg.d_model});
        for (const char* w : {"q", "k", "v", "o"})
            req.emplace_back(p + "attn." + w, std::vector<int64_t>{cfg.d_model, cfg.d_model});
        req.emplace_back(p + "ln2.g", std::vector<int64_t>{cfg.d_model});
        req.emplace_back(p + "ln2.b", std::vector<int64_t>{cfg.d_model});
        req.emplace_back(p + "ffn.K", std::vector<int64_t>{cfg.d_model, cfg.d_ff});
        req.emplace_back(p + "ffn.V", std::vector<int64_t>{cfg.d_ff, cfg.d_model});
    }
    return req;
}

const Tensor& TensorMap::get(const std::string& name) const {
    auto it = entries.find(name);
    if (it == entries.end()) fail(ERR_DATA, "missing tensor '" + name + "'");
    return it->second;
}

void TensorMap::validate() const {
    config.validate();
    auto req = required_tensors(config);
    for (const auto& [name, shape] : req) {
        auto it = entries.find(name);
        if (it == entries.end()) fail(ERR_DATA, "missing tensor '" + name + "'");
        const Tensor& t = it->second;
        if (t.shape != shape) fail(ERR_DATA, "shape mismatch for tensor '" + name + "'");
        if (t.numel() != static_cast<int64_t>(t.data.size()))
            fail(ERR_DATA, "size mismatch for tensor '" + name + "'");
        for (float v : t.data)
            if (!std::isfinite(v)) fail(ERR_DATA, "non-finite value in tensor '" + name + "'");
    }
    if (entries.size() != req.size()) {
        for (const auto& [name, t] : entries) {
            bool known = false;
            for (const auto& [rname, rshape] : req)
                if (rname == name) { known = true; break; }
            if (!known) fail(ERR_DATA, "unexpected tensor '" + name + "'");
        }
    }
}

}  // namespace gloss
