#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common.hpp"

namespace gloss {

double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

void normalize(std::span<double> x) {
    double n = norm(x);
    if (n == 0.0) fail(ERR_NUMERIC, "cannot normalize zero vector");
    for (auto& v : x) v /= n;
}

Mat matmul(const Mat& A, const Mat& B) {
    if (A.cols != B.rows) fail(ERR_NUMERIC, "matmul dimension mismatch");
    Mat C(A.rows, B.cols);
    for (int64_t i = 0; i < A.rows; ++i)
        for (int64_t k = 0; k < A.cols; ++k) {
            double aik = A.at(i, k);
            if (aik == 0.0) continue;
            for (int64_t j = 0; j < B.cols; ++j) C.at(i, j) += aik * B.at(k, j);
        }
    return C;
}

Mat transpose(const Mat& M) {
    Mat T(M.cols, M.rows);
    for (int64_t i = 0; i < M.rows; ++i)
        for (int64_t j = 0; j < M.cols; ++j) T.at(j, i) = M.at(i, j);
    return T;
}

static void fix_sign(std::span<double> v) {
    int64_t imax = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[imax])) imax = static_cast<int64_t>(i);
    if (v[imax] < 0.0)
        for (auto& x : v) x = -x;
}

EigenResult jacobi_eigen_sym(Mat A) {
    const int64_t n = A.rows;
    if (n != A.cols) fail(ERR_NUMERIC, "jacobi: matrix not square");

    Mat V(n, n);
    for (int64_t i = 0; i < n; ++i) V.at(i, i) = 1.0;

    double anorm = 0.0;
    for (double x : A.a) anorm += x * x;
    anorm = std::sqrt(anorm);
    const double tol = 1e-12 * std::max(anorm, 1e-300);

    for (int sweep = 0; sweep < 128; ++sweep) {
        double off = 0.0;
        for (int64_t p = 0; p < n; ++p)
            for (int64_t q = p + 1; q < n; ++q) off += 2.0 * A.at(p, q) * A.at(p, q);
        if (std::sqrt(off) <= tol) break;

        for (int64_t p = 0; p < n; ++p) {
            for (int64_t q = p + 1; q < n; ++q) {
                double apq = A.at(p, q);
                if (std::abs(apq) <= tol / (n * n + 1)) continue;
                double app = A.at(p, p), aqq = A.at(q, q);
                double theta = (aqq - app) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;

                for (int64_t i = 0; i < n; ++i) {
                    double aip = A.at(i, p), aiq = A.at(i, q);
                    A.at(i, p) = c * aip - s * aiq;
                    A.at(i, q) = s * aip + c * aiq;
                }
                for (int64_t i = 0; i < n; ++i) {
                    double api = A.at(p, i), aqi = A.at(q, i);
                    A.at(p, i) = c * api - s * aqi;
                    A.at(q, i) = s * api + c * aqi;
                }
                for (int64_t i = 0; i < n; ++i) {
                    double vip = V.at(i, p), viq = V.at(i, q);
                    V.at(i, p) = c * vip - s * viq;
                    V.at(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int64_t i, int64_t j) { return A.at(i, i) > A.at(j, j); });

    EigenResult res;
    res.values.resize(static_cast<size_t>(n));
    res.vectors = Mat(n, n);
    for (int64_t r = 0; r < n; ++r) {
        int64_t src = order[static_cast<size_t>(r)];
        res.values[static_cast<size_t>(r)] = A.at(src, src);
        for (int64_t i = 0; i < n; ++i) res.vectors.at(r, i) = V.at(i, src);
        fix_sign(res.vectors.row(r));
    }
    return res;
}

std::vector<SingularTriplet> top_right_singular(const Mat& M, int64_t k) {
    const int64_t N = M.rows, d = M.cols;
    if (k < 1 || k > std::min(N, d))
        fail(ERR_NUMERIC, "top_right_singular: k out of range");
    for (double x : M.a)
        if (!std::isfinite(x)) fail(ERR_NUMERIC, "top_right_singular: non-finite input");

    std::vector<SingularTriplet> out;
    out.reserve(static_cast<size_t>(k));

    if (d <= N) {
        // Gram on the column side: eigenvectors are the right singular vectors.
        Mat Mt = transpose(M);
        EigenResult eg = jacobi_eigen_sym(matmul(Mt, M));
        double s1 = std::sqrt(std::max(eg.values[0], 0.0));
        for (int64_t i = 0; i < k; ++i) {
            SingularTriplet t;
            t.sigma = std::sqrt(std::max(eg.values[static_cast<size_t>(i)], 0.0));
            t.degenerate = (t.sigma * t.sigma < 1e-12 * s1 * s1) || s1 == 0.0;
            auto r = eg.vectors.row(i);
            t.v.assign(r.begin(), r.end());
            fix_sign(t.v);
            out.push_back(std::move(t));
        }
    } else {
        // Gram on the row side; map left eigenvectors through M^T.
        Mat Mt = transpose(M);
        EigenResult eg = jacobi_eigen_sym(matmul(M, Mt));
        double s1 = std::sqrt(std::max(eg.values[0], 0.0));
        for (int64_t i = 0; i < k; ++i) {
            SingularTriplet t;
            t.sigma = std::sqrt(std::max(eg.values[static_cast<size_t>(i)], 0.0));
            t.degenerate = (t.sigma * t.sigma < 1e-12 * s1 * s1) || s1 == 0.0;
            t.v.assign(static_cast<size_t>(d), 0.0);
            if (!t.degenerate) {
                auto u = eg.vectors.row(i);
                for (int64_t c = 0; c < d; ++c) {
                    double s = 0.0;
                    for (int64_t r = 0; r < N; ++r) s += M.at(r, c) * u[static_cast<size_t>(r)];
                    t.v[static_cast<size_t>(c)] = s / t.sigma;
                }
                normalize(t.v);
                fix_sign(t.v);
            }
            out.push_back(std::move(t));
        }
    }
    return out;
}

void check_basis(const Basis& b) {
    for (int64_t i = 0; i < b.rank(); ++i) {
        double ni = norm(b.vectors.row(i));
        if (std::abs(ni - 1.0) > 1e-6) fail(ERR_NUMERIC, "basis row not unit norm");
        for (int64_t j = i + 1; j < b.rank(); ++j)
            if (std::abs(dot(b.vectors.row(i), b.vectors.row(j))) > 1e-5)
                fail(ERR_NUMERIC, "basis rows not orthogonal");
    }
}

OrthoResult orthonormalize(const Mat& vectors) {
    if (vectors.rows == 0) fail(ERR_NUMERIC, "orthonormalize: empty input");
    OrthoResult res;
    std::vector<std::vector<double>> kept;
    for (int64_t i = 0; i < vectors.rows; ++i) {
        std::vector<double> v(vectors.row(i).begin(), vectors.row(i).end());
        for (const auto& q : kept) {
            double c = dot(v, q);
            for (size_t j = 0; j < v.size(); ++j) v[j] -= c * q[j];
        }
        if (norm(v) < 1e-8) {
            res.dropped.push_back(i);
            continue;
        }
        normalize(v);
        kept.push_back(std::move(v));
    }
    res.basis.vectors = Mat(static_cast<int64_t>(kept.size()), vectors.cols);
    for (size_t r = 0; r < kept.size(); ++r)
        std::copy(kept[r].begin(), kept[r].end(), res.basis.vectors.row(static_cast<int64_t>(r)).begin());
    return res;
}

Basis principal_components(const Mat& rows, double eta, bool center) {
    if (rows.rows < 1) fail(ERR_NUMERIC, "principal_components: empty input");
    if (!(eta > 0.0 && eta <= 1.0)) fail(ERR_CONFIG, "principal_components: eta outside (0,1]");

    Mat M = rows;
    if (center) {
        for (int64_t c = 0; c < M.cols; ++c) {
            double mu = 0.0;
            for (int64_t r = 0; r < M.rows; ++r) mu += M.at(r, c);
            mu /= static_cast<double>(M.rows);
            for (int64_t r = 0; r < M.rows; ++r) M.at(r, c) -= mu;
        }
    }
    bool all_zero = true;
    for (double x : M.a)
        if (x != 0.0) { all_zero = false; break; }
    if (all_zero) fail(ERR_NUMERIC, "principal_components: all-zero input");

    auto trips = top_right_singular(M, std::min(M.rows, M.cols));
    double total = 0.0;
    for (const auto& t : trips) total += t.sigma * t.sigma;
    if (total == 0.0) fail(ERR_NUMERIC, "principal_components: zero variance");

    int64_t r = 0;
    double cum = 0.0;
    for (const auto& t : trips) {
        if (t.degenerate) break;
        ++r;
        cum += t.sigma * t.sigma;
        if (cum / total >= eta) break;
    }
    if (r == 0) fail(ERR_NUMERIC, "principal_components: no non-degenerate component");

    Basis b;
    b.vectors = Mat(r, M.cols);
    for (int64_t i = 0; i < r; ++i)
        std::copy(trips[static_cast<size_t>(i)].v.begin(), trips[static_cast<size_t>(i)].v.end(),
                  b.vectors.row(i).begin());
    return b;
}

void complement_apply_row(const Basis& basis, std::span<double> v) {
    for (int64_t i = 0; i < basis.rank(); ++i) {
        auto d = basis.vectors.row(i);
        double c = dot({v.data(), v.size()}, d);
        for (size_t j = 0; j < v.size(); ++j) v[j] -= c * d[j];
    }
}

Mat complement_apply(const Basis& basis, const Mat& M) {
    if (basis.rank() == 0) fail(ERR_NUMERIC, "complement_apply: empty basis");
    if (basis.dim() != M.cols) fail(ERR_NUMERIC, "complement_apply: dimension mismatch");
    Mat out = M;
    for (int64_t r = 0; r < out.rows; ++r) complement_apply_row(basis, out.row(r));
    return out;
}

Mat projector(const Basis& basis) {
    Mat P(basis.dim(), basis.dim());
    for (int64_t i = 0; i < basis.rank(); ++i) {
        auto d = basis.vectors.row(i);
        for (int64_t r = 0; r < P.rows; ++r)
            for (int64_t c = 0; c < P.cols; ++c)
                P.at(r, c) += d[static_cast<size_t>(r)] * d[static_cast<size_t>(c)];
    }
    return P;
}

}  // namespace gloss
