#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "linalg.hpp"

namespace gloss {

struct Tensor {
    std::vector<int64_t> shape;
    std::vector<float> data;  // row-major

    int64_t numel() const {
        int64_t n = 1;
        for (auto s : shape) n *= s;
        return n;
    }
    float at2(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * shape[1] + c)]; }
    float& at2(int64_t r, int64_t c) { return data[static_cast<size_t>(r * shape[1] + c)]; }

    Mat to_mat() const;                 // requires 2-d shape
    static Tensor from_mat(const Mat& m);
};

struct ModelConfig {
    int64_t n_layers = 0;
    int64_t d_model = 0;
    int64_t d_ff = 0;
    int64_t vocab_size = 0;
    int64_t n_heads = 0;
    int64_t max_seq = 0;

    bool operator==(const ModelConfig&) const = default;
    void validate() const;  // ERR_DATA on violation
};

// Named dense tensors plus architecture metadata. `meta` travels in the
// checkpoint header (edit provenance etc.) and never affects the forward pass.
struct TensorMap {
    std::map<std::string, Tensor> entries;
    ModelConfig config;
    nlohmann::json meta = nlohmann::json::object();

    const Tensor& get(const std::string& name) const;
    // Checks that exactly the required tensor names exist with the required
    // shapes and that every value is finite.
    void validate() const;
};

// (name, shape) pairs mandated by a config.
std::vector<std::pair<std::string, std::vector<int64_t>>> required_tensors(const ModelConfig& cfg);

}  // namespace gloss
