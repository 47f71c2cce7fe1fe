#include "surgery.hpp"

#include "common.hpp"
#include "tensorstore.hpp"

namespace gloss {

void EditPlan::validate(int64_t n_layers) const {
    if (layer_start < 0 || layer_end >= n_layers || layer_start > layer_end)
        fail(ERR_CONFIG, "edit plan layer range invalid");
}

int64_t default_layer_start(const ModelConfig& cfg) { return (cfg.n_layers + 1) / 2; }

TensorMap apply_gloss(const TensorMap& model, const GlobalSubspace& subspace,
                      const EditPlan& plan) {
    plan.validate(model.config.n_layers);
    if (subspace.rank() < 1) fail(ERR_NUMERIC, "empty subspace basis");
    if (subspace.dim() != model.config.d_model)
        fail(ERR_DATA, "subspace dimension does not match model d_model");
    check_basis(subspace.basis);

    TensorMap edited = model;
    for (int64_t l = plan.layer_start; l <= plan.layer_end; ++l) {
        Tensor& V = edited.entries.at("layer." + std::to_string(l) + ".ffn.V");
        Mat W = V.to_mat();  // d_ff rows of d-dimensional value vectors
        W = complement_apply(subspace.basis, W);
        V = Tensor::from_mat(W);
    }
    edited.meta["edit"] = {
        {"type", "subspace-complement"},
        {"layer_start", plan.layer_start},
        {"layer_end", plan.layer_end},
        {"r", subspace.rank()},
        {"subspace_hash", subspace_hash(subspace)},
    };
    return edited;
}

GlobalSubspace random_control_subspace(const GlobalSubspace& subspace, uint64_t seed) {
    const int64_t r = subspace.rank(), d = subspace.dim();
    if (2 * r > d) fail(ERR_NUMERIC, "ambient dimension too small for an orthogonal control");

    Rng rng(seed);
    GlobalSubspace control = subspace;
    control.basis.vectors = Mat(r, d);
    control.provenance = {{"control_of", subspace_hash(subspace)}, {"seed", seed}};

    int64_t made = 0;
    int guard = 0;
    while (made < r) {
        if (++guard > 1000) fail(ERR_NUMERIC, "control subspace generation failed to converge");
        std::vector<double> v(static_cast<size_t>(d));
        for (auto& x : v) x = rng.gaussian();
        // orthogonalize against the toxic basis and already-made rows
        complement_apply_row(subspace.basis, v);
        for (int64_t i = 0; i < made; ++i) {
            double c = dot(v, control.basis.vectors.row(i));
            auto q = control.basis.vectors.row(i);
            for (size_t j = 0; j < v.size(); ++j) v[j] -= c * q[j];
        }
        if (norm(v) < 1e-8) continue;
        normalize(v);
        std::copy(v.begin(), v.end(), control.basis.vectors.row(made).begin());
        ++made;
    }
    check_basis(control.basis);
    return control;
}

}  // namespace gloss
