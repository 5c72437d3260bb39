#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "spbvp/discretize.hpp"
#include "spbvp/problems.hpp"

using namespace spbvp;

namespace {

SystemProblem constant_problem(DenseMatrix b, DenseMatrix a, ProblemKind kind = ProblemKind::StronglyCoupled) {
    const std::size_t m = a.rows();
    SystemProblem p;
    p.name = "test";
    p.kind = kind;
    p.eps.assign(m, 1e-3);
    p.diffusion.assign(m, 1e-3);
    if (kind != ProblemKind::ReactionDiffusion) p.B = MatrixField::constant(std::move(b));
    p.A = MatrixField::constant(std::move(a));
    p.f = VectorField::constant(std::vector<double>(m, 1.0));
    p.g0.assign(m, 0.0);
    p.g1.assign(m, 0.0);
    return p;
}

SystemProblem rd_problem(DenseMatrix a) {
    return constant_problem(DenseMatrix(), std::move(a), ProblemKind::ReactionDiffusion);
}

oracle::Matrix to_oracle(const DenseMatrix& m) {
    oracle::Matrix out(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
    return out;
}

}  // namespace

TEST_CASE("check_gamma examples") {
    SUBCASE("identity") {
        const auto r = check_gamma(rd_problem(DenseMatrix::identity(3)));
        CHECK(r.gamma.matrix == DenseMatrix::identity(3));
        CHECK(r.gamma.inverse_nonnegative);
        CHECK(r.zeta == 0.0);
        REQUIRE(r.kappa);
        CHECK(*r.kappa == doctest::Approx(1.0));
    }
    SUBCASE("strongly diagonally dominant") {
        const auto r = check_gamma(rd_problem(DenseMatrix{{4.0, -1.0, 0.5}, {1.0, 3.0, -1.0}, {0.2, 0.2, 1.0}}));
        CHECK(r.gamma.inverse_nonnegative);
        CHECK(r.diag_dominant);
        CHECK(r.zeta == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("ratios of 2 give a non-monotone Gamma") {
        const auto r = check_gamma(rd_problem(DenseMatrix{{1.0, 2.0}, {2.0, 1.0}}));
        CHECK(r.gamma.matrix(0, 1) == -2.0);
        CHECK(r.gamma.matrix(1, 0) == -2.0);
        // [[1,-2],[-2,1]]^{-1} = -(1/3) [[1,2],[2,1]]
        CHECK(r.gamma.min_inverse_entry == doctest::Approx(-2.0 / 3.0));
        CHECK_FALSE(r.gamma.inverse_nonnegative);
        CHECK_FALSE(r.diag_dominant);
        CHECK_FALSE(r.kappa);
    }
    SUBCASE("singular Gamma is reported, not thrown") {
        const auto r = check_gamma(rd_problem(DenseMatrix{{1.0, 1.0}, {1.0, 1.0}}));
        CHECK_FALSE(r.gamma.inverse_nonnegative);
        CHECK(r.gamma.reason.find("singular") != std::string::npos);
    }
    SUBCASE("non-positive diagonal violates the precondition") {
        CHECK_THROWS_AS(check_gamma(rd_problem(DenseMatrix{{0.0, 1.0}, {1.0, 1.0}})), std::invalid_argument);
    }
    SUBCASE("variable coefficients are sampled") {
        SystemProblem p = rd_problem(DenseMatrix::identity(2));
        p.A = MatrixField::function(2, [](double x) { return DenseMatrix{{1.0 + x, -x}, {0.0, 2.0}}; });
        const auto r = check_gamma(p);
        CHECK(r.gamma.matrix(0, 1) == doctest::Approx(-0.5));
        CHECK(*r.kappa == doctest::Approx(std::sqrt(0.5)));
    }
}

TEST_CASE("check_gamma verdict is invariant under positive row scaling") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> off(-1.5, 1.5), diag(0.5, 3.0), scale(0.01, 100.0);
    std::uniform_int_distribution<int> size(2, 4);
    for (int trial = 0; trial < 200; ++trial) {
        const auto m = static_cast<std::size_t>(size(rng));
        DenseMatrix a(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) a(i, j) = i == j ? diag(rng) : off(rng);
        const SystemProblem p = rd_problem(a);
        std::vector<double> s(m);
        for (double& v : s) v = scale(rng);
        const auto r1 = check_gamma(p);
        const auto r2 = check_gamma(p.scaled_rows(s));
        CHECK(r1.gamma.inverse_nonnegative == r2.gamma.inverse_nonnegative);
        CHECK((r1.gamma.matrix - r2.gamma.matrix).norm_inf() <= 1e-13);
    }
}

TEST_CASE("symmetric A: monotone Gamma with positive diagonal implies positive definite") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> off(-1.0, 1.0), diag(0.5, 2.5);
    std::uniform_int_distribution<int> size(2, 4);
    int monotone = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const auto m = static_cast<std::size_t>(size(rng));
        DenseMatrix a(m, m);
        for (std::size_t i = 0; i < m; ++i) {
            a(i, i) = diag(rng);
            for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i) = off(rng);
        }
        if (!check_gamma(rd_problem(a)).gamma.inverse_nonnegative) continue;
        ++monotone;
        CHECK(jacobi_eigh(a).values.front() > 0.0);
    }
    CHECK(monotone >= 30);
}

TEST_CASE("check_upsilon") {
    SUBCASE("diagonal B: off-diagonals come from A only") {
        const auto p = constant_problem(DenseMatrix{{1.0, 0.0}, {0.0, 2.0}}, DenseMatrix{{1.0, -0.5}, {0.3, 1.0}});
        StabilityReport r;
        check_upsilon(p, r);
        REQUIRE(r.upsilon);
        CHECK(r.upsilon->matrix(0, 1) == doctest::Approx(-0.5));
        CHECK(r.upsilon->matrix(1, 0) == doctest::Approx(-0.3));
        CHECK(r.upsilon_heuristic);
        CHECK(r.upsilon_constants == std::vector<double>{1.0, 1.0});
    }
    SUBCASE("constant 2x2 by hand") {
        const auto p =
            constant_problem(DenseMatrix{{2.0, 0.5}, {-0.4, 3.0}}, DenseMatrix{{0.0, 0.1}, {0.2, 0.0}});
        StabilityReport r;
        check_upsilon(p, r, {0.5, 0.25});
        // -C_i (|a_ij| + |b_ij|)
        CHECK(r.upsilon->matrix(0, 1) == doctest::Approx(-0.3));
        CHECK(r.upsilon->matrix(1, 0) == doctest::Approx(-0.15));
        CHECK(r.upsilon->inverse_nonnegative);
    }
    SUBCASE("variable B uses the L1 norm of b' + a") {
        SystemProblem p = constant_problem(DenseMatrix::identity(2), DenseMatrix(2, 2));
        p.B = MatrixField::function(
            2, [](double x) { return DenseMatrix{{1.0, x}, {0.0, 1.0}}; },
            [](double) { return DenseMatrix{{0.0, 1.0}, {0.0, 0.0}}; });
        StabilityReport r;
        check_upsilon(p, r);
        CHECK(r.upsilon->matrix(0, 1) == doctest::Approx(-2.0).epsilon(1e-6));
        CHECK(r.upsilon->matrix(1, 0) == 0.0);
    }
    SUBCASE("reaction-diffusion problems are rejected") {
        StabilityReport r;
        CHECK_THROWS_AS(check_upsilon(rd_problem(DenseMatrix::identity(2)), r), std::invalid_argument);
    }
}

TEST_CASE("monotone Upsilon implies B is generalized diagonally dominant") {
    // With C_i = 1/b_ii a monotone Upsilon yields a positive d with
    // b_ii d_i > sum_j |b_ij| d_j; d = Upsilon^{-1} 1 is the witness.
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> off(-1.0, 1.0), diag(0.5, 2.0);
    std::uniform_int_distribution<int> size(2, 4);
    int monotone = 0, symmetric_checked = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const auto m = static_cast<std::size_t>(size(rng));
        const bool symmetric = trial % 2 == 0;
        DenseMatrix b(m, m);
        for (std::size_t i = 0; i < m; ++i) {
            b(i, i) = diag(rng);
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                if (symmetric && j < i) {
                    b(i, j) = b(j, i);
                } else {
                    b(i, j) = off(rng);
                }
            }
        }
        std::vector<double> C(m);
        for (std::size_t i = 0; i < m; ++i) C[i] = 1.0 / b(i, i);
        StabilityReport r;
        check_upsilon(constant_problem(b, DenseMatrix(m, m)), r, C);
        if (!r.upsilon->inverse_nonnegative) continue;
        ++monotone;
        const auto d = oracle::gauss_solve(to_oracle(r.upsilon->matrix), std::vector<double>(m, 1.0));
        for (std::size_t i = 0; i < m; ++i) {
            CHECK(d[i] > 0.0);
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j)
                if (j != i) s += std::abs(b(i, j)) * d[j];
            CHECK(b(i, i) * d[i] > s);
        }
        if (symmetric) {
            ++symmetric_checked;
            CHECK(jacobi_eigh(b).values.front() > 0.0);
        }
    }
    CHECK(monotone >= 40);
    CHECK(symmetric_checked >= 10);
}

TEST_CASE("strongly coupled example") {
    const double eps = 1e-2;
    const auto inst = builtin_strongly_coupled_example(eps);
    const auto& u = inst.reference;
    CHECK(inst.problem.kind == ProblemKind::StronglyCoupled);
    CHECK(u.kind == ReferenceKind::Asymptotic);
    const double tiny = std::exp(-5.0 / eps);
    SUBCASE("boundary combinations vanish up to exponentially small terms") {
        const auto u0 = u(0.0), u1 = u(1.0);
        CHECK(std::abs(u0[0] - 2.0 * u0[1]) <= tiny);
        CHECK(std::abs(2.0 * u1[0] + u1[1]) <= tiny);
        CHECK(std::abs(u0[0]) <= tiny);
        CHECK(std::abs(u1[1]) <= 1e-15);
    }
    SUBCASE("interior matches the reduced solution") {
        const auto mid = builtin_strongly_coupled_example(1e-4).reference(0.5);
        CHECK(std::abs(mid[0] - (8.0 / 25 - 11.0 / 50)) <= 1e-12);
        CHECK(std::abs(mid[1] - (4.0 / 25 + 2.0 / 50)) <= 1e-12);
        // Reduced solution at x = 0.
        const double x = 0.0;
        CHECK(8.0 / 25 - 11.0 / 25 * x == doctest::Approx(0.32));
    }
    SUBCASE("asymptotic solution satisfies the equations") {
        // Second derivative by central differences; B u' from the closed-form derivative.
        for (double x : {0.1, 0.3, 0.5, 0.7, 0.9, 0.01, 0.99}) {
            const double h = 1e-7;
            const auto d = u.derivative(x);
            const auto up = u.derivative(x + h), um = u.derivative(x - h);
            const double d2a = (up[0] - um[0]) / (2 * h), d2b = (up[1] - um[1]) / (2 * h);
            CHECK(-eps * d2a - 3.0 * d[0] - 4.0 * d[1] == doctest::Approx(1.0).epsilon(1e-6));
            CHECK(-eps * d2b - 4.0 * d[0] + 3.0 * d[1] == doctest::Approx(2.0).epsilon(1e-6));
        }
    }
    SUBCASE("first-derivative envelope constant is eps independent") {
        double lo = INFINITY, hi = 0.0;
        for (double e : {1e-2, 1e-4, 1e-6, 1e-8}) {
            const auto in = builtin_strongly_coupled_example(e);
            for (std::size_t k = 0; k < 2; ++k) {
                const double c = envelope_check(in.reference, k, in.envelope, 1);
                lo = std::min(lo, c);
                hi = std::max(hi, c);
            }
        }
        CHECK(hi / lo <= 3.0);
    }
}

TEST_CASE("scalar convection-diffusion problem") {
    SUBCASE("closed-form values at 0, 1/2, 1") {
        for (double eps : {1.0, 0.1, 1e-3}) {
            const auto inst = builtin_scalar_cd(eps);
            const long double e = eps;
            const long double half = 0.5L - (std::exp(-0.5L / e) - std::exp(-1.0L / e)) / (1.0L - std::exp(-1.0L / e));
            CHECK(std::abs(inst.reference(0.0)[0]) <= 1e-12);
            CHECK(std::abs(inst.reference(1.0)[0]) <= 1e-12);
            CHECK(std::abs(inst.reference(0.5)[0] - static_cast<double>(half)) <= 1e-12);
        }
    }
    SUBCASE("maximum is attained in the interior") {
        for (double eps : {1.0, 1e-2, 1e-6}) {
            const auto inst = builtin_scalar_cd(eps);
            double best = -1.0, arg = -1.0;
            for (int s = 0; s <= 10000; ++s) {
                const double x = s / 10000.0;
                const double v = inst.reference(x)[0];
                if (v > best) best = v, arg = x;
            }
            CHECK(arg > 0.0);
            CHECK(arg < 1.0);
            CHECK(best > 0.0);
        }
    }
    SUBCASE("residual by independent finite differences") {
        const double eps = 0.05;
        const auto inst = builtin_scalar_cd(eps);
        for (double x : {0.2, 0.5, 0.9, 0.97}) {
            const double h = 1e-4;
            const double um = inst.reference(x - h)[0], u0 = inst.reference(x)[0], up = inst.reference(x + h)[0];
            const double res = -eps * (up - 2 * u0 + um) / (h * h) + (up - um) / (2 * h);
            CHECK(res == doctest::Approx(1.0).epsilon(1e-4));
        }
    }
    SUBCASE("envelope constants") {
        const auto smooth = builtin_scalar_cd(1.0);
        CHECK(envelope_check(smooth.reference, 0, smooth.envelope, 1) <= 2.0);
        double lo = INFINITY, hi = 0.0;
        for (double eps : {1e-2, 1e-4, 1e-6, 1e-8}) {
            const auto inst = builtin_scalar_cd(eps);
            const double c = envelope_check(inst.reference, 0, inst.envelope, 1);
            lo = std::min(lo, c);
            hi = std::max(hi, c);
            // k = 0: the envelope is at least 1 and close to 1 where |u| peaks, and 0 <= u < 1.
            double sup = 0.0;
            for (int s = 0; s <= 1000; ++s) sup = std::max(sup, std::abs(inst.reference(s / 1000.0)[0]));
            const double c0 = envelope_check(inst.reference, 0, inst.envelope, 0);
            CHECK(c0 <= 1.0);
            CHECK(c0 >= 0.99 * sup);
            const double c2 = envelope_check(inst.reference, 0, inst.envelope, 2);
            CHECK(c2 <= 3.0);
        }
        CHECK(hi / lo <= 3.0);
    }
}

TEST_CASE("reaction-diffusion system") {
    const std::vector<double> eps{1e-6, 1e-3};
    const auto inst = builtin_reaction_diffusion_system(eps, 1536);
    const auto rep = check_gamma(inst.problem);
    CHECK(rep.gamma.inverse_nonnegative);
    REQUIRE(rep.kappa);
    // zeta = 1/4 / 2, kappa^2 = (1 - 1/8) * 2
    CHECK(*rep.kappa == doctest::Approx(std::sqrt(1.75)).epsilon(1e-14));
    CHECK(inst.reference.kind == ReferenceKind::FineMeshOracle);
    REQUIRE(inst.reference.n_ref);
    CHECK(*inst.reference.n_ref == 1536);
    for (double x : {0.0, 1e-7, 1e-3, 0.5, 1.0}) {
        CHECK(inst.envelope(x, 0) >= 1.0);
        CHECK(inst.envelope(x, 2) >= 1.0);
    }
    SUBCASE("boundary values and interior reduced solution") {
        const auto u0 = inst.reference(0.0), um = inst.reference(0.5);
        CHECK(u0[0] == 0.0);
        CHECK(u0[1] == 0.0);
        // A u = f away from the layers.
        const double a = 2.0, b = -0.25;
        CHECK(a * um[0] + b * um[1] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(b * um[0] + a * um[1] == doctest::Approx(2.0).epsilon(1e-9));
    }
    SUBCASE("oracle refinement is well below the study error") {
        const std::size_t n = 192;
        const auto fine = builtin_reaction_diffusion_system(eps, 16 * n);
        const auto finer = builtin_reaction_diffusion_system(eps, 32 * n);
        const Mesh1D mesh = system_shishkin(eps, 2.0, *rep.kappa, n, LayerSide::Both);
        const auto sol = solve(fine.problem, mesh, Scheme::Central);
        double study = 0.0, oracle_gap = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            const auto a = fine.reference(mesh.x(i)), b = finer.reference(mesh.x(i));
            for (std::size_t k = 0; k < 2; ++k) {
                study = std::max(study, std::abs(sol.value(i, k) - b[k]));
                oracle_gap = std::max(oracle_gap, std::abs(a[k] - b[k]));
            }
        }
        CHECK(oracle_gap < 0.1 * study);
    }
}

TEST_CASE("weakly coupled system") {
    const auto inst = builtin_weakly_coupled_cd({1e-6, 1e-3}, 3000);
    CHECK_NOTHROW(inst.problem.validate());
    SystemProblem bad = inst.problem;
    bad.B = MatrixField::constant(DenseMatrix{{1.0, 0.1}, {0.0, 1.0}});
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK(check_gamma(inst.problem).gamma.inverse_nonnegative);
    // Reduced problem u' + A u = f at x = 0 is satisfied by the oracle near the inflow.
    const auto u = inst.reference(0.0);
    CHECK(u[0] == 0.0);
    CHECK(u[1] == 0.0);
}

TEST_CASE("graded eps lists and the registry") {
    const auto e = graded_eps_list(1e-6, 2);
    CHECK(e[0] == doctest::Approx(1e-6));
    CHECK(e[1] == doctest::Approx(1e-3));
    for (const auto& name : builtin_names()) CHECK_NOTHROW(make_builtin(name, 1e-4, 300));
    CHECK_THROWS_AS(make_builtin("nope", 1e-4, 300), std::invalid_argument);
}

TEST_CASE("fine-mesh oracle interpolates linearly") {
    const Mesh1D m({0.0, 0.25, 1.0});
    const auto r = ReferenceSolution::from_nodal(m, {0.0, 1.0, 1.0, 3.0, 2.0, 5.0}, 2, "test");
    CHECK(r(0.125)[0] == doctest::Approx(0.5));
    CHECK(r(0.125)[1] == doctest::Approx(2.0));
    CHECK(r(0.625)[0] == doctest::Approx(1.5));
    CHECK(r(1.0)[1] == 5.0);
    CHECK_THROWS_AS(r(1.5), std::domain_error);
}
