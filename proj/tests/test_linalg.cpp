#include <doctest.h>

#include "core/common.hpp"
#include "core/linalg.hpp"
#include "oracles.hpp"

using namespace gloss;

static Mat random_mat(Rng& rng, int64_t r, int64_t c) {
    Mat m(r, c);
    for (auto& x : m.a) x = rng.gaussian();
    return m;
}

TEST_CASE("top_right_singular: diagonal matrix") {
    Mat M(4, 3);
    M.at(0, 0) = 3.0;
    M.at(1, 1) = 2.0;
    M.at(2, 2) = 1.0;
    auto t = top_right_singular(M, 3);
    CHECK(t[0].sigma == doctest::Approx(3.0));
    CHECK(t[1].sigma == doctest::Approx(2.0));
    CHECK(t[2].sigma == doctest::Approx(1.0));
    CHECK(std::abs(t[0].v[0]) == doctest::Approx(1.0));
    CHECK(t[0].v[0] > 0.0);  // sign convention
}

TEST_CASE("top_right_singular: rank-1 outer product recovers b, flags sigma_2") {
    Rng rng(7);
    std::vector<double> a(8), b(5);
    for (auto& x : a) x = rng.gaussian();
    for (auto& x : b) x = rng.gaussian();
    Mat M(8, 5);
    for (int64_t i = 0; i < 8; ++i)
        for (int64_t j = 0; j < 5; ++j) M.at(i, j) = a[size_t(i)] * b[size_t(j)];
    auto t = top_right_singular(M, 2);
    std::vector<double> bn = b;
    normalize(bn);
    CHECK(oracle::cos_abs(t[0].v, bn) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(t[1].degenerate);
}

TEST_CASE("top_right_singular matches the independent Jacobi oracle") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        int64_t n = 4 + int64_t(rng.below(8)), d = 3 + int64_t(rng.below(6));
        Mat M = random_mat(rng, n, d);
        int64_t k = std::min<int64_t>(3, std::min(n, d));
        auto impl = top_right_singular(M, k);
        auto orc = oracle::right_singular_oracle(M);
        for (int64_t i = 0; i < k; ++i) {
            CHECK(impl[size_t(i)].sigma == doctest::Approx(orc.values[size_t(i)]).epsilon(1e-6));
            if (!impl[size_t(i)].degenerate &&
                (i + 1 == int64_t(orc.values.size()) ||
                 orc.values[size_t(i)] - orc.values[size_t(i + 1)] > 1e-6))
                CHECK(oracle::cos_abs(impl[size_t(i)].v, orc.vectors[size_t(i)]) ==
                      doctest::Approx(1.0).epsilon(1e-6));
        }
        // M^T M v = sigma^2 v
        for (int64_t i = 0; i < k; ++i) {
            if (impl[size_t(i)].degenerate) continue;
            const auto& v = impl[size_t(i)].v;
            double s2 = impl[size_t(i)].sigma * impl[size_t(i)].sigma;
            std::vector<double> Mv(size_t(n), 0.0);
            for (int64_t r = 0; r < n; ++r)
                for (int64_t c = 0; c < d; ++c) Mv[size_t(r)] += M.at(r, c) * v[size_t(c)];
            for (int64_t c = 0; c < d; ++c) {
                double mtmv = 0.0;
                for (int64_t r = 0; r < n; ++r) mtmv += M.at(r, c) * Mv[size_t(r)];
                CHECK(mtmv == doctest::Approx(s2 * v[size_t(c)]).epsilon(1e-6).scale(s2 + 1.0));
            }
        }
    }
}

TEST_CASE("top_right_singular: k too large / non-finite input") {
    Mat M(2, 2);
    M.at(0, 0) = 1.0;
    CHECK_THROWS_AS(top_right_singular(M, 3), Error);
    M.at(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(top_right_singular(M, 1), Error);
}

TEST_CASE("SVD reconstruction on small matrices") {
    Rng rng(11);
    Mat M = random_mat(rng, 6, 6);
    auto t = top_right_singular(M, 6);
    // reconstruct via M = sum sigma_i u_i v_i^T with u_i = M v_i / sigma_i
    Mat R(6, 6);
    for (const auto& trip : t) {
        if (trip.degenerate) continue;
        std::vector<double> u(6, 0.0);
        for (int64_t r = 0; r < 6; ++r)
            for (int64_t c = 0; c < 6; ++c) u[size_t(r)] += M.at(r, c) * trip.v[size_t(c)];
        for (auto& x : u) x /= trip.sigma;
        for (int64_t r = 0; r < 6; ++r)
            for (int64_t c = 0; c < 6; ++c) R.at(r, c) += trip.sigma * u[size_t(r)] * trip.v[size_t(c)];
    }
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < M.a.size(); ++i) {
        num += (M.a[i] - R.a[i]) * (M.a[i] - R.a[i]);
        den += M.a[i] * M.a[i];
    }
    CHECK(std::sqrt(num / den) < 1e-5);
}

TEST_CASE("principal_components: single repeated direction") {
    Rng rng(3);
    std::vector<double> u(10);
    for (auto& x : u) x = rng.gaussian();
    normalize(u);
    Mat rows(5, 10);
    for (int64_t r = 0; r < 5; ++r)
        for (int64_t c = 0; c < 10; ++c) rows.at(r, c) = u[size_t(c)];
    Basis b = principal_components(rows, 0.9);
    REQUIRE(b.rank() == 1);
    CHECK(oracle::cos_abs(b.vectors.row(0), u) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("principal_components: 50/50 split needs both directions at eta=0.6") {
    Mat rows(4, 6);
    rows.at(0, 0) = rows.at(1, 0) = 1.0;
    rows.at(2, 1) = rows.at(3, 1) = 1.0;
    Basis b = principal_components(rows, 0.6);
    CHECK(b.rank() == 2);
}

TEST_CASE("principal_components: all-zero input fails") {
    Mat rows(3, 4);
    CHECK_THROWS_AS(principal_components(rows, 0.5), Error);
}

TEST_CASE("principal_components r matches direct cumulative variance") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        Mat rows = random_mat(rng, 6, 5);
        double eta = 0.3 + 0.65 * rng.uniform();
        Basis b = principal_components(rows, eta);

        auto orc = oracle::right_singular_oracle(rows);
        double total = 0.0;
        for (double s : orc.values) total += s * s;
        int64_t want = 0;
        double cum = 0.0;
        for (double s : orc.values) {
            ++want;
            cum += s * s;
            if (cum / total >= eta) break;
        }
        CHECK(b.rank() == want);
    }
}

TEST_CASE("orthonormalize basics") {
    Mat v(2, 3);
    v.at(0, 0) = 1.0;
    v.at(1, 0) = 1.0;
    v.at(1, 1) = 1.0;
    auto res = orthonormalize(v);
    REQUIRE(res.basis.rank() == 2);
    CHECK(res.basis.vectors.at(0, 0) == doctest::Approx(1.0));
    CHECK(res.basis.vectors.at(1, 1) == doctest::Approx(1.0));
    CHECK(std::abs(res.basis.vectors.at(1, 0)) < 1e-12);

    Mat w(2, 3);
    w.at(0, 0) = 1.0;
    w.at(1, 0) = 2.0;
    auto res2 = orthonormalize(w);
    CHECK(res2.basis.rank() == 1);
    REQUIRE(res2.dropped.size() == 1);
    CHECK(res2.dropped[0] == 1);
}

TEST_CASE("orthonormalize: Gram matrix of 10 random vectors is identity") {
    Rng rng(5);
    Mat v = random_mat(rng, 10, 16);
    auto res = orthonormalize(v);
    REQUIRE(res.basis.rank() == 10);
    for (int64_t i = 0; i < 10; ++i)
        for (int64_t j = 0; j < 10; ++j) {
            double g = dot(res.basis.vectors.row(i), res.basis.vectors.row(j));
            CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) < 1e-5);
        }
}

TEST_CASE("complement_apply: annihilation, invariance, projector oracle") {
    Rng rng(9);
    Mat raw = random_mat(rng, 3, 12);
    Basis basis = orthonormalize(raw).basis;
    REQUIRE(basis.rank() == 3);

    // in-subspace vector is annihilated
    Mat inb(1, 12);
    std::copy(basis.vectors.row(0).begin(), basis.vectors.row(0).end(), inb.row(0).begin());
    Mat out = complement_apply(basis, inb);
    CHECK(norm(out.row(0)) < 1e-10);

    // orthogonal vector is untouched
    Mat perp(1, 12);
    for (int64_t c = 0; c < 12; ++c) perp.at(0, c) = rng.gaussian();
    complement_apply_row(basis, perp.row(0));
    Mat kept = complement_apply(basis, perp);
    for (int64_t c = 0; c < 12; ++c)
        CHECK(kept.at(0, c) == doctest::Approx(perp.at(0, c)).epsilon(1e-10));

    // matches the explicit projector P = sum d d^T
    Mat v(1, 12);
    for (int64_t c = 0; c < 12; ++c) v.at(0, c) = rng.gaussian();
    Mat res = complement_apply(basis, v);
    Mat P = projector(basis);
    for (int64_t c = 0; c < 12; ++c) {
        double pv = 0.0;
        for (int64_t j = 0; j < 12; ++j) pv += P.at(c, j) * v.at(0, j);
        CHECK(res.at(0, c) == doctest::Approx(v.at(0, c) - pv).epsilon(1e-6));
    }

    // idempotence
    Mat twice = complement_apply(basis, res);
    for (size_t i = 0; i < twice.a.size(); ++i)
        CHECK(std::abs(twice.a[i] - res.a[i]) < 1e-6);
}

TEST_CASE("determinism: identical inputs, identical outputs") {
    Rng rng(77);
    Mat M = random_mat(rng, 9, 7);
    auto a = top_right_singular(M, 4);
    auto b = top_right_singular(M, 4);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].sigma == b[i].sigma);
        CHECK(a[i].v == b[i].v);
    }
}
