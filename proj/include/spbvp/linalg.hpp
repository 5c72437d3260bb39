#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spbvp {

/// Raised by the direct solvers when a pivot (scalar or block) is singular.
class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& what, std::size_t index)
        : std::runtime_error(what), index_(index) {}

    /// Row (thomas, dense LU) or block index (block_thomas) where elimination broke down.
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Small dense row-major matrix. Sized for the M x M coefficient blocks of
/// coupled systems (M <= 16 in practice).
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix diagonal(std::span<const double> d);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    DenseMatrix transpose() const;
    /// Max absolute row sum.
    double norm_inf() const;
    /// Max |a_ij - a_ji|.
    double symmetry_residual() const;

    friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
    friend DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
    friend DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
    friend DenseMatrix operator*(double s, const DenseMatrix& a);
    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// y = A x
std::vector<double> multiply(const DenseMatrix& a, std::span<const double> x);

/// LU factorisation with partial pivoting, P A = L U.
class LuFactorization {
public:
    /// Throws SingularMatrixError when a pivot falls below `pivot_floor`.
    explicit LuFactorization(DenseMatrix a, double pivot_floor = 1e-300);

    std::size_t size() const noexcept { return lu_.rows(); }
    std::vector<double> solve(std::span<const double> b) const;
    /// Solves for every column of `b`.
    DenseMatrix solve(const DenseMatrix& b) const;
    /// Smallest |U_ii|.
    double min_pivot() const noexcept;

private:
    DenseMatrix lu_;
    std::vector<std::size_t> perm_;
};

std::vector<double> dense_lu_solve(const DenseMatrix& a, std::span<const double> b);
DenseMatrix dense_inverse(const DenseMatrix& a);

/// Symmetric eigendecomposition B = P diag(values) P^T.
struct EigenPair {
    std::vector<double> values;  ///< ascending
    DenseMatrix vectors;         ///< columns are eigenvectors, orthonormal
};

/// Cyclic Jacobi rotations. Eigenvalues come back ascending and each
/// eigenvector is normalised so its largest-magnitude entry is positive.
/// Throws std::invalid_argument if the input is not symmetric to 1e-10 and
/// std::runtime_error after `max_sweeps` without convergence.
EigenPair jacobi_eigh(const DenseMatrix& b, double tol = 1e-12, int max_sweeps = 50);

/// Scalar tridiagonal system. lower[i] couples row i+1 to row i, upper[i]
/// couples row i to row i+1, so lower/upper have n-1 entries.
struct Tridiag {
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;

    std::size_t size() const noexcept { return diag.size(); }
};

std::vector<double> thomas(const Tridiag& sys, std::span<const double> rhs);

/// Block tridiagonal system with n diagonal blocks of size m x m.
/// lower[i] sits in block row i+1, column i; upper[i] in block row i, column i+1.
struct BlockTridiag {
    std::size_t block = 0;
    std::vector<DenseMatrix> lower;
    std::vector<DenseMatrix> main;
    std::vector<DenseMatrix> upper;

    BlockTridiag() = default;
    BlockTridiag(std::size_t n, std::size_t m);

    std::size_t size() const noexcept { return main.size(); }
    /// Throws std::invalid_argument when block counts or shapes disagree.
    void validate() const;
    /// Full dense matrix of dimension n*m. Intended for tests and small n.
    DenseMatrix to_dense() const;
};

/// Block Thomas algorithm with a dense LU per pivot block. With m = 1 this
/// performs exactly the floating-point operations of thomas().
std::vector<double> block_thomas(const BlockTridiag& sys, std::span<const double> rhs);

/// y = T x, serial reference.
std::vector<double> block_apply_serial(const BlockTridiag& sys, std::span<const double> x);
/// y = T x, OpenMP-parallel over block rows.
std::vector<double> block_apply(const BlockTridiag& sys, std::span<const double> x);

double norm_inf(std::span<const double> v);

}  // namespace spbvp
