#include "spbvp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spbvp {

namespace {

constexpr double kPivotFloor = 1e-300;

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument(std::string("DenseMatrix ") + op + ": shape mismatch");
    }
}

}  // namespace

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw std::invalid_argument("DenseMatrix: ragged initializer");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double DenseMatrix::norm_inf() const {
    double best = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
        best = std::max(best, s);
    }
    return best;
}

double DenseMatrix::symmetry_residual() const {
    if (!square()) return INFINITY;
    double r = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = i + 1; j < cols_; ++j)
            r = std::max(r, std::abs((*this)(i, j) - (*this)(j, i)));
    return r;
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("DenseMatrix *: shape mismatch");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    }
    return c;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "+");
    DenseMatrix c = a;
    for (std::size_t k = 0; k < c.data_.size(); ++k) c.data_[k] += b.data_[k];
    return c;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "-");
    DenseMatrix c = a;
    for (std::size_t k = 0; k < c.data_.size(); ++k) c.data_[k] -= b.data_[k];
    return c;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
    DenseMatrix c = a;
    for (double& v : c.data_) v *= s;
    return c;
}

std::vector<double> multiply(const DenseMatrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw std::invalid_argument("multiply: dimension mismatch");
    std::vector<double> y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// ---------------------------------------------------------------------------
// Dense LU

LuFactorization::LuFactorization(DenseMatrix a, double pivot_floor) : lu_(std::move(a)) {
    if (!lu_.square()) throw std::invalid_argument("LuFactorization: matrix not square");
    const std::size_t n = lu_.rows();
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::abs(lu_(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(lu_(i, k)) > best) {
                best = std::abs(lu_(i, k));
                p = i;
            }
        }
        if (!(best >= pivot_floor)) {
            throw SingularMatrixError("dense LU: singular pivot in column " + std::to_string(k), k);
        }
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
            std::swap(perm_[k], perm_[p]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double l = lu_(i, k) / lu_(k, k);
            lu_(i, k) = l;
            for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= l * lu_(k, j);
        }
    }
}

std::vector<double> LuFactorization::solve(std::span<const double> b) const {
    const std::size_t n = size();
    if (b.size() != n) throw std::invalid_argument("LuFactorization::solve: dimension mismatch");
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[perm_[i]];
        for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * y[j];
        y[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= lu_(ii, j) * y[j];
        y[ii] = s / lu_(ii, ii);
    }
    return y;
}

DenseMatrix LuFactorization::solve(const DenseMatrix& b) const {
    if (b.rows() != size()) throw std::invalid_argument("LuFactorization::solve: dimension mismatch");
    DenseMatrix x(b.rows(), b.cols());
    std::vector<double> col(b.rows());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
        const auto sol = solve(col);
        for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = sol[i];
    }
    return x;
}

double LuFactorization::min_pivot() const noexcept {
    double m = INFINITY;
    for (std::size_t i = 0; i < size(); ++i) m = std::min(m, std::abs(lu_(i, i)));
    return m;
}

std::vector<double> dense_lu_solve(const DenseMatrix& a, std::span<const double> b) {
    return LuFactorization(a).solve(b);
}

DenseMatrix dense_inverse(const DenseMatrix& a) {
    return LuFactorization(a).solve(DenseMatrix::identity(a.rows()));
}

// ---------------------------------------------------------------------------
// Jacobi eigensolver

EigenPair jacobi_eigh(const DenseMatrix& b, double tol, int max_sweeps) {
    if (!b.square()) throw std::invalid_argument("jacobi_eigh: matrix not square");
    const double scale = std::max(b.norm_inf(), 1e-300);
    if (b.symmetry_residual() > 1e-10 * std::max(1.0, scale)) {
        throw std::invalid_argument("jacobi_eigh: matrix is not symmetric");
    }
    const std::size_t n = b.rows();
    DenseMatrix a = b;
    DenseMatrix v = DenseMatrix::identity(n);

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    int sweep = 0;
    while (off_norm() > tol * scale * 1e-3) {
        if (sweep++ >= max_sweeps) {
            throw std::runtime_error("jacobi_eigh: no convergence after " +
                                     std::to_string(max_sweeps) + " sweeps");
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // Rotation angle annihilating a(p,q), in the stable tangent form.
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    EigenPair out;
    out.values.resize(n);
    out.vectors = DenseMatrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t src = order[c];
        out.values[c] = a(src, src);
        std::size_t big = 0;
        for (std::size_t k = 1; k < n; ++k)
            if (std::abs(v(k, src)) > std::abs(v(big, src))) big = k;
        const double sign = v(big, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, c) = sign * v(k, src);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tridiagonal solvers

std::vector<double> thomas(const Tridiag& sys, std::span<const double> rhs) {
    const std::size_t n = sys.size();
    if (n == 0) return {};
    if (sys.lower.size() != n - 1 || sys.upper.size() != n - 1 || rhs.size() != n) {
        throw std::invalid_argument("thomas: inconsistent dimensions");
    }
    std::vector<double> cp(n, 0.0), dp(n);
    double m = sys.diag[0];
    if (!(std::abs(m) >= kPivotFloor)) throw SingularMatrixError("thomas: zero pivot at row 0", 0);
    if (n > 1) cp[0] = sys.upper[0] / m;
    dp[0] = rhs[0] / m;
    for (std::size_t i = 1; i < n; ++i) {
        m = sys.diag[i] - sys.lower[i - 1] * cp[i - 1];
        if (!(std::abs(m) >= kPivotFloor)) {
            throw SingularMatrixError("thomas: zero pivot at row " + std::to_string(i), i);
        }
        if (i + 1 < n) cp[i] = sys.upper[i] / m;
        dp[i] = (rhs[i] - sys.lower[i - 1] * dp[i - 1]) / m;
    }
    std::vector<double> x(n);
    x[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
    return x;
}

BlockTridiag::BlockTridiag(std::size_t n, std::size_t m) : block(m) {
    main.assign(n, DenseMatrix(m, m));
    if (n > 0) {
        lower.assign(n - 1, DenseMatrix(m, m));
        upper.assign(n - 1, DenseMatrix(m, m));
    }
}

void BlockTridiag::validate() const {
    const std::size_t n = main.size();
    const std::size_t expect = n == 0 ? 0 : n - 1;
    if (lower.size() != expect || upper.size() != expect) {
        throw std::invalid_argument("BlockTridiag: lower/upper must have n-1 blocks");
    }
    auto ok = [&](const DenseMatrix& b) { return b.rows() == block && b.cols() == block; };
    if (!std::all_of(main.begin(), main.end(), ok) || !std::all_of(lower.begin(), lower.end(), ok) ||
        !std::all_of(upper.begin(), upper.end(), ok)) {
        throw std::invalid_argument("BlockTridiag: block shape mismatch");
    }
}

DenseMatrix BlockTridiag::to_dense() const {
    const std::size_t n = size();
    const std::size_t m = block;
    DenseMatrix d(n * m, n * m);
    auto put = [&](std::size_t bi, std::size_t bj, const DenseMatrix& b) {
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < m; ++c) d(bi * m + r, bj * m + c) = b(r, c);
    };
    for (std::size_t i = 0; i < n; ++i) {
        put(i, i, main[i]);
        if (i + 1 < n) {
            put(i, i + 1, upper[i]);
            put(i + 1, i, lower[i]);
        }
    }
    return d;
}

std::vector<double> block_thomas(const BlockTridiag& sys, std::span<const double> rhs) {
    sys.validate();
    const std::size_t n = sys.size();
    const std::size_t m = sys.block;
    if (rhs.size() != n * m) throw std::invalid_argument("block_thomas: rhs dimension mismatch");
    if (n == 0) return {};

    // Forward sweep: C_hat[i] = P_i^{-1} C_i, d_hat[i] = P_i^{-1}(d_i - A_{i-1} d_hat[i-1]).
    std::vector<DenseMatrix> c_hat(n > 0 ? n - 1 : 0);
    std::vector<std::vector<double>> d_hat(n);
    auto factor = [&](const DenseMatrix& p, std::size_t i) {
        try {
            return LuFactorization(p, kPivotFloor);
        } catch (const SingularMatrixError&) {
            throw SingularMatrixError("block_thomas: singular pivot block " + std::to_string(i), i);
        }
    };

    for (std::size_t i = 0; i < n; ++i) {
        DenseMatrix pivot = sys.main[i];
        std::vector<double> d(rhs.begin() + i * m, rhs.begin() + (i + 1) * m);
        if (i > 0) {
            const DenseMatrix& a = sys.lower[i - 1];
            pivot = pivot - a * c_hat[i - 1];
            const auto ad = multiply(a, d_hat[i - 1]);
            for (std::size_t r = 0; r < m; ++r) d[r] -= ad[r];
        }
        const LuFactorization lu = factor(pivot, i);
        if (i + 1 < n) c_hat[i] = lu.solve(sys.upper[i]);
        d_hat[i] = lu.solve(d);
    }

    std::vector<double> x(n * m);
    std::copy(d_hat[n - 1].begin(), d_hat[n - 1].end(), x.begin() + (n - 1) * m);
    for (std::size_t i = n - 1; i-- > 0;) {
        const auto cx = multiply(c_hat[i], std::span<const double>(x).subspan((i + 1) * m, m));
        for (std::size_t r = 0; r < m; ++r) x[i * m + r] = d_hat[i][r] - cx[r];
    }
    return x;
}

namespace {

void apply_row(const BlockTridiag& sys, std::span<const double> x, std::span<double> y, std::size_t i) {
    const std::size_t n = sys.size();
    const std::size_t m = sys.block;
    for (std::size_t r = 0; r < m; ++r) {
        double s = 0.0;
        if (i > 0)
            for (std::size_t c = 0; c < m; ++c) s += sys.lower[i - 1](r, c) * x[(i - 1) * m + c];
        for (std::size_t c = 0; c < m; ++c) s += sys.main[i](r, c) * x[i * m + c];
        if (i + 1 < n)
            for (std::size_t c = 0; c < m; ++c) s += sys.upper[i](r, c) * x[(i + 1) * m + c];
        y[i * m + r] = s;
    }
}

void check_apply_dims(const BlockTridiag& sys, std::span<const double> x) {
    sys.validate();
    if (x.size() != sys.size() * sys.block) {
        throw std::invalid_argument("block_apply: vector dimension mismatch");
    }
}

}  // namespace

std::vector<double> block_apply_serial(const BlockTridiag& sys, std::span<const double> x) {
    check_apply_dims(sys, x);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < sys.size(); ++i) apply_row(sys, x, y, i);
    return y;
}

std::vector<double> block_apply(const BlockTridiag& sys, std::span<const double> x) {
    check_apply_dims(sys, x);
    std::vector<double> y(x.size());
    const auto n = static_cast<std::ptrdiff_t>(sys.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) apply_row(sys, x, y, static_cast<std::size_t>(i));
    return y;
}

}  // namespace spbvp
