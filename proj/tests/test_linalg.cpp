#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "spbvp/linalg.hpp"

using namespace spbvp;

namespace {

oracle::Matrix to_oracle(const DenseMatrix& m) {
    oracle::Matrix out(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
    return out;
}

Tridiag random_dominant_tridiag(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Tridiag t;
    t.lower.resize(n - 1);
    t.upper.resize(n - 1);
    t.diag.resize(n);
    for (auto& v : t.lower) v = u(rng);
    for (auto& v : t.upper) v = u(rng);
    for (auto& v : t.diag) v = 2.5 + u(rng);
    return t;
}

BlockTridiag random_dominant_blocks(std::size_t n, std::size_t m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BlockTridiag t(n, m);
    auto fill = [&](DenseMatrix& b) {
        for (double& v : b.data()) v = u(rng);
    };
    for (auto& b : t.lower) fill(b);
    for (auto& b : t.upper) fill(b);
    for (auto& b : t.main) {
        fill(b);
        for (std::size_t r = 0; r < m; ++r) b(r, r) = 3.0 * static_cast<double>(m) + 1.0 + u(rng);
    }
    return t;
}

}  // namespace

TEST_CASE("thomas: identity system returns the rhs") {
    Tridiag t{{0.0, 0.0}, {1.0, 1.0, 1.0}, {0.0, 0.0}};
    const std::vector<double> rhs{3.0, -1.0, 7.5};
    CHECK(thomas(t, rhs) == rhs);
}

TEST_CASE("thomas: 3x3 hand solution") {
    // [2 -1 0; -1 2 -1; 0 -1 2] x = [1 0 1] has x = [1 1 1].
    Tridiag t{{-1.0, -1.0}, {2.0, 2.0, 2.0}, {-1.0, -1.0}};
    const auto x = thomas(t, std::vector<double>{1.0, 0.0, 1.0});
    for (double v : x) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("thomas: random diagonally dominant n=100 matches dense elimination") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Tridiag t = random_dominant_tridiag(100, rng);
        std::vector<double> rhs(100);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (double& v : rhs) v = u(rng);
        oracle::Matrix dense(100, std::vector<double>(100, 0.0));
        for (std::size_t i = 0; i < 100; ++i) {
            dense[i][i] = t.diag[i];
            if (i + 1 < 100) {
                dense[i][i + 1] = t.upper[i];
                dense[i + 1][i] = t.lower[i];
            }
        }
        const auto x = thomas(t, rhs);
        CHECK(oracle::max_abs_diff(x, oracle::gauss_solve(dense, rhs)) <= 1e-10);
        // Residual contract.
        const auto r = oracle::matvec(dense, x);
        CHECK(oracle::max_abs_diff(r, rhs) <= 1e-12 * (5.0 * norm_inf(x) + norm_inf(rhs)));
    }
}

TEST_CASE("thomas: zero pivot names the row") {
    Tridiag t{{1.0, 1.0}, {1.0, 1.0, 1.0}, {1.0, 1.0}};
    try {
        thomas(t, std::vector<double>{1.0, 1.0, 1.0});
        FAIL("expected SingularMatrixError");
    } catch (const SingularMatrixError& e) {
        CHECK(e.index() == 1);
    }
}

TEST_CASE("block_thomas with 1x1 blocks is bitwise thomas") {
    std::mt19937_64 rng(11);
    const Tridiag t = random_dominant_tridiag(64, rng);
    BlockTridiag b(64, 1);
    for (std::size_t i = 0; i < 64; ++i) b.main[i](0, 0) = t.diag[i];
    for (std::size_t i = 0; i < 63; ++i) {
        b.lower[i](0, 0) = t.lower[i];
        b.upper[i](0, 0) = t.upper[i];
    }
    std::vector<double> rhs(64);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : rhs) v = u(rng);
    CHECK(block_thomas(b, rhs) == thomas(t, rhs));
}

TEST_CASE("block_thomas: block-diagonal system decouples into dense solves") {
    std::mt19937_64 rng(3);
    BlockTridiag b = random_dominant_blocks(5, 3, rng);
    for (auto& l : b.lower) l = DenseMatrix(3, 3);
    for (auto& u : b.upper) u = DenseMatrix(3, 3);
    std::vector<double> rhs(15);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = std::sin(static_cast<double>(i));
    const auto x = block_thomas(b, rhs);
    for (std::size_t i = 0; i < 5; ++i) {
        const std::vector<double> bi(rhs.begin() + 3 * i, rhs.begin() + 3 * i + 3);
        const auto xi = oracle::gauss_solve(to_oracle(b.main[i]), bi);
        for (std::size_t r = 0; r < 3; ++r) CHECK(x[3 * i + r] == doctest::Approx(xi[r]).epsilon(1e-14));
    }
}

TEST_CASE("block_thomas: random M=3, n=40 matches dense elimination") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const BlockTridiag b = random_dominant_blocks(40, 3, rng);
        std::vector<double> rhs(120);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (double& v : rhs) v = u(rng);
        const auto x = block_thomas(b, rhs);
        CHECK(oracle::max_abs_diff(x, oracle::gauss_solve(to_oracle(b.to_dense()), rhs)) <= 1e-9);
    }
}

TEST_CASE("block_thomas: singular pivot block is reported by index") {
    BlockTridiag b(3, 2);
    for (auto& m : b.main) m = DenseMatrix::identity(2);
    b.main[2] = DenseMatrix(2, 2);
    try {
        block_thomas(b, std::vector<double>(6, 1.0));
        FAIL("expected SingularMatrixError");
    } catch (const SingularMatrixError& e) {
        CHECK(e.index() == 2);
    }
}

TEST_CASE("dense LU and inverse") {
    SUBCASE("identity") { CHECK(dense_inverse(DenseMatrix::identity(4)) == DenseMatrix::identity(4)); }
    SUBCASE("2x2 closed form") {
        const DenseMatrix inv = dense_inverse(DenseMatrix{{4.0, 7.0}, {2.0, 6.0}});
        CHECK(inv(0, 0) == doctest::Approx(0.6));
        CHECK(inv(0, 1) == doctest::Approx(-0.7));
        CHECK(inv(1, 0) == doctest::Approx(-0.2));
        CHECK(inv(1, 1) == doctest::Approx(0.4));
    }
    SUBCASE("random M=8 multiply-back") {
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int trial = 0; trial < 50; ++trial) {
            DenseMatrix a(8, 8);
            for (double& v : a.data()) v = u(rng);
            for (std::size_t i = 0; i < 8; ++i) a(i, i) += 4.0;
            const DenseMatrix r = a * dense_inverse(a) - DenseMatrix::identity(8);
            CHECK(r.norm_inf() <= 1e-10);
        }
    }
    SUBCASE("singular matrix is reported") {
        CHECK_THROWS_AS(dense_inverse(DenseMatrix{{1.0, 2.0}, {2.0, 4.0}}), SingularMatrixError);
    }
}

TEST_CASE("jacobi_eigh") {
    SUBCASE("diagonal input") {
        const EigenPair e = jacobi_eigh(DenseMatrix{{3.0, 0.0, 0.0}, {0.0, -1.0, 0.0}, {0.0, 0.0, 2.0}});
        CHECK(e.values == std::vector<double>{-1.0, 2.0, 3.0});
        // Columns are signed unit vectors of a permutation.
        CHECK(e.vectors(1, 0) == 1.0);
        CHECK(e.vectors(2, 1) == 1.0);
        CHECK(e.vectors(0, 2) == 1.0);
    }
    SUBCASE("convection matrix of the coupled example has eigenvalues -5 and 5") {
        const EigenPair e = jacobi_eigh(DenseMatrix{{-3.0, -4.0}, {-4.0, 3.0}});
        CHECK(std::abs(e.values[0] + 5.0) <= 1e-12);
        CHECK(std::abs(e.values[1] - 5.0) <= 1e-12);
    }
    SUBCASE("random symmetric M=6 reconstruction and orthogonality") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        for (int trial = 0; trial < 50; ++trial) {
            DenseMatrix b(6, 6);
            for (std::size_t i = 0; i < 6; ++i)
                for (std::size_t j = i; j < 6; ++j) b(i, j) = b(j, i) = u(rng);
            const EigenPair e = jacobi_eigh(b);
            const DenseMatrix& p = e.vectors;
            CHECK((p.transpose() * p - DenseMatrix::identity(6)).norm_inf() <= 1e-10);
            const DenseMatrix bp = b * p;
            const DenseMatrix pl = p * DenseMatrix::diagonal(e.values);
            CHECK((bp - pl).norm_inf() <= 1e-10 * b.norm_inf());
            for (std::size_t k = 1; k < 6; ++k) CHECK(e.values[k - 1] <= e.values[k]);
        }
    }
    SUBCASE("2x2 against the closed form") {
        std::mt19937_64 rng(19);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        for (int trial = 0; trial < 100; ++trial) {
            const double a = u(rng), b = u(rng), d = u(rng);
            const auto ref = oracle::eig2(a, b, d);
            const EigenPair e = jacobi_eigh(DenseMatrix{{a, b}, {b, d}});
            CHECK(e.values[0] == doctest::Approx(ref[0]).epsilon(1e-12).scale(6.0));
            CHECK(e.values[1] == doctest::Approx(ref[1]).epsilon(1e-12).scale(6.0));
        }
    }
    SUBCASE("nonsymmetric input rejected") {
        CHECK_THROWS_AS(jacobi_eigh(DenseMatrix{{1.0, 2.0}, {0.0, 1.0}}), std::invalid_argument);
    }
}

TEST_CASE("block_apply agrees with the dense product and with the serial kernel") {
    std::mt19937_64 rng(23);
    const BlockTridiag b = random_dominant_blocks(30, 2, rng);
    std::vector<double> x(60);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::cos(0.3 * static_cast<double>(i));
    const auto y = block_apply(b, x);
    CHECK(y == block_apply_serial(b, x));
    CHECK(oracle::max_abs_diff(y, oracle::matvec(to_oracle(b.to_dense()), x)) <= 1e-12);
    CHECK_THROWS_AS(block_apply(b, std::vector<double>(59)), std::invalid_argument);
}

TEST_CASE("jacobi_eigh: eigenvalues invariant under orthogonal similarity") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 2 + static_cast<std::size_t>(trial % 6);
        DenseMatrix b(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j <= i; ++j) b(i, j) = b(j, i) = u(rng);
        const oracle::Matrix p = oracle::random_orthogonal(m, rng);
        DenseMatrix c(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t k = 0; k < m; ++k)
                    for (std::size_t l = 0; l < m; ++l) c(i, j) += p[k][i] * b(k, l) * p[l][j];
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < i; ++j) c(i, j) = c(j, i);
        const auto e0 = jacobi_eigh(b).values;
        const auto e1 = jacobi_eigh(c).values;
        CHECK(oracle::max_abs_diff(e0, e1) <= 1e-9);
    }
}

TEST_CASE("randomized suites: 1000 instances against dense oracles") {
    std::mt19937_64 rng(73);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst_thomas = 0.0, worst_block = 0.0, worst_recon = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 30);
        const Tridiag t = random_dominant_tridiag(n, rng);
        std::vector<double> b(n);
        for (double& v : b) v = u(rng);
        oracle::Matrix a(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            a[i][i] = t.diag[i];
            if (i + 1 < n) {
                a[i][i + 1] = t.upper[i];
                a[i + 1][i] = t.lower[i];
            }
        }
        worst_thomas = std::max(worst_thomas, oracle::max_abs_diff(thomas(t, b), oracle::gauss_solve(a, b)));

        const std::size_t m = 1 + static_cast<std::size_t>(trial % 4), nb = 2 + static_cast<std::size_t>(trial % 9);
        BlockTridiag s(nb, m);
        for (std::size_t i = 0; i < nb; ++i)
            for (std::size_t r = 0; r < m; ++r)
                for (std::size_t c = 0; c < m; ++c) {
                    s.main[i](r, c) = u(rng) + (r == c ? 6.0 * m : 0.0);
                    if (i + 1 < nb) {
                        s.lower[i](r, c) = u(rng);
                        s.upper[i](r, c) = u(rng);
                    }
                }
        std::vector<double> rhs(nb * m);
        for (double& v : rhs) v = u(rng);
        worst_block = std::max(worst_block, oracle::max_abs_diff(block_thomas(s, rhs),
                                                                 oracle::gauss_solve(to_oracle(s.to_dense()), rhs)));

        DenseMatrix sym(m + 1, m + 1);
        for (std::size_t i = 0; i <= m; ++i)
            for (std::size_t j = 0; j <= i; ++j) sym(i, j) = sym(j, i) = u(rng);
        const EigenPair e = jacobi_eigh(sym);
        const DenseMatrix recon = e.vectors * DenseMatrix::diagonal(e.values) * e.vectors.transpose();
        worst_recon = std::max(worst_recon, (recon - sym).norm_inf());
    }
    CHECK(worst_thomas <= 1e-10);
    CHECK(worst_block <= 1e-9);
    CHECK(worst_recon <= 1e-10);
}
