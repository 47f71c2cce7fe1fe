#include "ranking.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "common.hpp"

namespace gloss {

using nlohmann::json;

void BadWordsList::validate(int64_t vocab_size) const {
    if (ids.empty()) fail(ERR_DATA, "bad words list is empty");
    for (int64_t id : ids)
        if (id < 0 || id >= vocab_size)
            fail(ERR_DATA, "bad word token id " + std::to_string(id) + " out of range");
}

static std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

BadWordsList load_bad_words(const std::string& path, const std::vector<std::string>* vocab) {
    std::ifstream f(path);
    if (!f) fail(ERR_DATA, "cannot open bad words file: " + path);

    BadWordsList B;
    std::string line;
    while (std::getline(f, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        size_t start = 0;
        while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
        line = line.substr(start);
        if (line.empty()) continue;

        B.sources.push_back(line);
        bool numeric = std::all_of(line.begin(), line.end(),
                                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
        if (numeric) {
            B.ids.insert(std::stoll(line));
            continue;
        }
        if (!vocab) {
            B.unresolved.push_back(line);
            continue;
        }
        std::string needle = lower(line);
        bool found = false;
        for (size_t id = 0; id < vocab->size(); ++id) {
            std::string cand = lower((*vocab)[id]);
            if (cand == needle || cand == " " + needle) {
                B.ids.insert(static_cast<int64_t>(id));
                found = true;
            }
        }
        if (!found) B.unresolved.push_back(line);
    }
    if (B.ids.empty()) fail(ERR_DATA, "bad words file resolved to an empty token set: " + path);
    return B;
}

std::vector<RankedToken> vocab_project(const Tensor& E, std::span<const double> v, int64_t m,
                                       bool negate) {
    const int64_t V = E.shape[0], d = E.shape[1];
    if (m < 1 || m > V) fail(ERR_DATA, "vocab_project: m out of range");
    if (static_cast<int64_t>(v.size()) != d) fail(ERR_DATA, "vocab_project: dimension mismatch");

    std::vector<RankedToken> all(static_cast<size_t>(V));
    const double sgn = negate ? -1.0 : 1.0;
    for (int64_t tok = 0; tok < V; ++tok) {
        double s = 0.0;
        const float* er = E.data.data() + tok * d;
        for (int64_t j = 0; j < d; ++j) s += static_cast<double>(er[j]) * v[static_cast<size_t>(j)];
        all[static_cast<size_t>(tok)] = {tok, sgn * s};
    }
    std::partial_sort(all.begin(), all.begin() + m, all.end(), [](const RankedToken& a, const RankedToken& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    all.resize(static_cast<size_t>(m));
    return all;
}

ToxScore tox_score(std::span<const double> v, const Tensor& E, const BadWordsList& B, int64_t m) {
    if (m < 1) fail(ERR_DATA, "tox_score: m must be >= 1");
    auto count_hits = [&](bool negate) {
        auto top = vocab_project(E, v, m, negate);
        int64_t hits = 0;
        for (const auto& t : top) hits += B.ids.count(t.id) ? 1 : 0;
        return static_cast<double>(hits) / static_cast<double>(m);
    };
    double s_pos = count_hits(false);
    double s_neg = count_hits(true);

    ToxScore res;
    res.flipped = s_neg > s_pos;
    res.score = std::max(s_pos, s_neg);
    res.oriented.assign(v.begin(), v.end());
    if (res.flipped)
        for (auto& x : res.oriented) x = -x;
    return res;
}

Selection select_high(const std::vector<DirectionCandidate>& candidates, double alpha_sel) {
    if (candidates.size() < 2) fail(ERR_DATA, "select_high: need at least 2 candidates");
    if (alpha_sel < 0.0) fail(ERR_CONFIG, "select_high: alpha_sel must be >= 0");

    Selection sel;
    double mu = 0.0;
    for (const auto& c : candidates) mu += c.tox;
    mu /= static_cast<double>(candidates.size());
    double var = 0.0;
    for (const auto& c : candidates) var += (c.tox - mu) * (c.tox - mu);
    var /= static_cast<double>(candidates.size());  // population std
    sel.mu = mu;
    sel.sigma = std::sqrt(var);
    sel.tau = mu + alpha_sel * sel.sigma;
    for (const auto& c : candidates)
        if (c.tox > sel.tau) sel.high.push_back(c);
    return sel;
}

GlobalSubspace build_global_subspace(const Selection& sel, double eta, const Tensor& E,
                                     const BadWordsList& B, int64_t m, bool center_pca) {
    if (sel.empty()) fail(ERR_NUMERIC, "empty V_high selection; lower alpha_sel");
    const int64_t d = static_cast<int64_t>(sel.high[0].vector.size());

    Mat stacked(static_cast<int64_t>(sel.high.size()), d);
    for (size_t i = 0; i < sel.high.size(); ++i)
        std::copy(sel.high[i].vector.begin(), sel.high[i].vector.end(),
                  stacked.row(static_cast<int64_t>(i)).begin());

    GlobalSubspace s;
    s.basis = principal_components(stacked, eta, center_pca);
    s.eta = eta;
    s.tau = sel.tau;
    s.m = m;

    // re-orient each principal direction toward its toxic side
    json dirs = json::array();
    for (int64_t r = 0; r < s.basis.rank(); ++r) {
        ToxScore ts = tox_score(s.basis.vectors.row(r), E, B, m);
        std::copy(ts.oriented.begin(), ts.oriented.end(), s.basis.vectors.row(r).begin());
        dirs.push_back({{"component", r}, {"tox_score", ts.score}});
    }

    json anc = json::array();
    for (const auto& c : sel.high)
        anc.push_back({{"layer", c.layer}, {"rank", c.svd_rank}, {"sigma", c.sigma}, {"score", c.tox}});
    s.provenance = {
        {"ancestry", anc},
        {"components", dirs},
        {"mu", sel.mu},
        {"sigma", sel.sigma},
        {"tau", sel.tau},
        {"r", s.basis.rank()},
        {"d", d},
        {"ratio", s.ratio()},
    };
    return s;
}

static json subspace_json(const GlobalSubspace& s) {
    json rows = json::array();
    for (int64_t r = 0; r < s.basis.rank(); ++r) {
        auto row = s.basis.vectors.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return json{{"alpha_sel", s.alpha_sel}, {"basis", rows},       {"eta", s.eta},
                {"m", s.m},                 {"provenance", s.provenance}, {"tau", s.tau}};
}

void save_subspace(const GlobalSubspace& s, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail(ERR_DATA, "unwritable path: " + path);
    f << subspace_json(s).dump(2) << "\n";
}

GlobalSubspace load_subspace(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ERR_DATA, "cannot open subspace file: " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        fail(ERR_DATA, "malformed subspace file: " + std::string(e.what()));
    }
    GlobalSubspace s;
    try {
        auto rows = j.at("basis").get<std::vector<std::vector<double>>>();
        if (rows.empty()) fail(ERR_DATA, "subspace file has empty basis");
        s.basis.vectors = Mat(static_cast<int64_t>(rows.size()), static_cast<int64_t>(rows[0].size()));
        for (size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != rows[0].size()) fail(ERR_DATA, "ragged basis in subspace file");
            std::copy(rows[r].begin(), rows[r].end(), s.basis.vectors.row(static_cast<int64_t>(r)).begin());
        }
        s.eta = j.at("eta").get<double>();
        s.alpha_sel = j.value("alpha_sel", 0.0);
        s.tau = j.value("tau", 0.0);
        s.m = j.value("m", int64_t{0});
        s.provenance = j.value("provenance", json::object());
    } catch (const json::exception& e) {
        fail(ERR_DATA, "malformed subspace file: " + std::string(e.what()));
    }
    check_basis(s.basis);
    return s;
}

std::string subspace_hash(const GlobalSubspace& s) {
    std::string dump = subspace_json(s).dump();
    return hex64(fnv1a64(dump.data(), dump.size()));
}

}  // namespace gloss
