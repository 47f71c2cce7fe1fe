#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace gloss {

// Dense row-major double matrix. All internal linear algebra runs in
// double regardless of the float32 storage precision of checkpoints.
struct Mat {
    int64_t rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int64_t r, int64_t c) : rows(r), cols(c), a(static_cast<size_t>(r * c), 0.0) {}

    double& at(int64_t r, int64_t c) { return a[static_cast<size_t>(r * cols + c)]; }
    double at(int64_t r, int64_t c) const { return a[static_cast<size_t>(r * cols + c)]; }

    std::span<double> row(int64_t r) { return {a.data() + r * cols, static_cast<size_t>(cols)}; }
    std::span<const double> row(int64_t r) const {
        return {a.data() + r * cols, static_cast<size_t>(cols)};
    }
};

double dot(std::span<const double> x, std::span<const double> y);
double norm(std::span<const double> x);
void normalize(std::span<double> x);  // fails on zero vector

Mat matmul(const Mat& A, const Mat& B);
Mat transpose(const Mat& M);

struct EigenResult {
    std::vector<double> values;  // descending
    Mat vectors;                 // rows are eigenvectors, same order
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Sweeps until the
// off-diagonal Frobenius mass falls below 1e-12 of the matrix norm.
EigenResult jacobi_eigen_sym(Mat A);

struct SingularTriplet {
    std::vector<double> v;  // right singular vector (d)
    double sigma = 0.0;
    bool degenerate = false;  // sigma < 1e-12 * sigma_1; vector unreliable
};

// Top-k right singular vectors of M via eigendecomposition of the smaller
// Gram matrix. Deterministic sign convention: the largest-magnitude
// component of each vector is positive.
std::vector<SingularTriplet> top_right_singular(const Mat& M, int64_t k);

// Orthonormal basis, rows unit-norm and mutually orthogonal.
struct Basis {
    Mat vectors;  // r x d
    int64_t rank() const { return vectors.rows; }
    int64_t dim() const { return vectors.cols; }
};

void check_basis(const Basis& b);  // throws ERR_NUMERIC on violation

struct OrthoResult {
    Basis basis;
    std::vector<int64_t> dropped;  // input indices lost to near-collinearity
};

// Modified Gram-Schmidt; vectors with residual norm < 1e-8 are dropped.
OrthoResult orthonormalize(const Mat& vectors);

// Minimal set of principal directions whose cumulative explained variance
// reaches eta. Uncentered by default: near-collinear direction sets would
// lose their shared component to mean subtraction.
Basis principal_components(const Mat& rows, double eta, bool center = false);

// v' = v - sum_i (d_i . v) d_i applied to every row of M.
Mat complement_apply(const Basis& basis, const Mat& M);
void complement_apply_row(const Basis& basis, std::span<double> v);

// P = sum_i d_i d_i^T, materialized. Test/diagnostic use.
Mat projector(const Basis& basis);

}  // namespace gloss
