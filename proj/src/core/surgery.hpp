#pragma once

#include "ranking.hpp"

namespace gloss {

struct EditPlan {
    int64_t layer_start = 0;
    int64_t layer_end = 0;  // inclusive

    void validate(int64_t n_layers) const;
};

// Default projection start: second half of the stack, ceil(L/2).
int64_t default_layer_start(const ModelConfig& cfg);

// Returns an edited copy: every FFN value vector (row of ffn.V) in the layer
// range is replaced by (I - P) v. All other tensors are bit-identical. Edit
// provenance is embedded in the checkpoint meta block.
TensorMap apply_gloss(const TensorMap& model, const GlobalSubspace& subspace,
                      const EditPlan& plan);

// Same-dimension random subspace orthogonal to the toxic basis (and itself),
// deterministic per seed. Used as the control edit.
GlobalSubspace random_control_subspace(const GlobalSubspace& subspace, uint64_t seed);

}  // namespace gloss
