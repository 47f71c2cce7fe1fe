#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "contrastive.hpp"

namespace gloss {

struct BadWordsList {
    std::set<int64_t> ids;
    std::vector<std::string> sources;
    std::vector<std::string> unresolved;  // strings with no vocabulary match

    void validate(int64_t vocab_size) const;  // non-empty, ids in range
};

// One entry per line; '#' starts a comment. Integer lines are token ids.
// String lines require a vocabulary (id -> string) and match
// case-insensitively, with and without a leading space.
BadWordsList load_bad_words(const std::string& path,
                            const std::vector<std::string>* vocab = nullptr);

struct RankedToken {
    int64_t id;
    double score;
};

// Top-m tokens by E.v (or E.(-v) when negate), ties broken by ascending id.
std::vector<RankedToken> vocab_project(const Tensor& E, std::span<const double> v, int64_t m,
                                       bool negate = false);

struct ToxScore {
    double score = 0.0;               // |top-m ∩ B| / m, max over both orientations
    std::vector<double> oriented;     // winning orientation of v
    bool flipped = false;
};

ToxScore tox_score(std::span<const double> v, const Tensor& E, const BadWordsList& B, int64_t m);

struct Selection {
    std::vector<DirectionCandidate> high;  // oriented, score > tau
    double mu = 0.0, sigma = 0.0, tau = 0.0;
    bool empty() const { return high.empty(); }
};

// tau = mean + alpha_sel * population std of all candidate scores; strict
// inequality. An empty selection is a reported condition, not an error.
Selection select_high(const std::vector<DirectionCandidate>& candidates, double alpha_sel);

struct GlobalSubspace {
    Basis basis;  // r x d
    double eta = 0.0;
    double alpha_sel = 0.0;
    double tau = 0.0;
    int64_t m = 0;
    nlohmann::json provenance = nlohmann::json::object();

    int64_t rank() const { return basis.rank(); }
    int64_t dim() const { return basis.dim(); }
    double ratio() const { return static_cast<double>(rank()) / static_cast<double>(dim()); }
};

GlobalSubspace build_global_subspace(const Selection& sel, double eta, const Tensor& E,
                                     const BadWordsList& B, int64_t m, bool center_pca = false);

void save_subspace(const GlobalSubspace& s, const std::string& path);
GlobalSubspace load_subspace(const std::string& path);
std::string subspace_hash(const GlobalSubspace& s);

}  // namespace gloss
