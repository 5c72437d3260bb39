// Gamma and Upsilon inverse-monotonicity checks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "spbvp/problems.hpp"

namespace spbvp {

namespace {

double sample_x(std::size_t s) {
    return static_cast<double>(s) / static_cast<double>(kCoefficientSamples - 1);
}

MatrixCheck inverse_monotone(DenseMatrix m) {
    MatrixCheck c;
    c.matrix = m;
    try {
        const DenseMatrix inv = dense_inverse(m);
        c.min_inverse_entry = *std::min_element(inv.data().begin(), inv.data().end());
        c.inverse_nonnegative = c.min_inverse_entry >= -1e-12;
        if (!c.inverse_nonnegative) c.reason = "inverse has a negative entry";
    } catch (const SingularMatrixError& e) {
        c.inverse_nonnegative = false;
        c.min_inverse_entry = -std::numeric_limits<double>::infinity();
        c.reason = std::string("singular: ") + e.what();
    }
    return c;
}

}  // namespace

StabilityReport check_gamma(const SystemProblem& problem) {
    problem.validate();
    const std::size_t m = problem.M();
    DenseMatrix ratio(m, m);  // sup_x |a_ij / a_ii|
    double min_diag = std::numeric_limits<double>::infinity();
    const std::size_t samples = problem.A.is_constant() ? 1 : kCoefficientSamples;
    for (std::size_t s = 0; s < samples; ++s) {
        const double x = sample_x(s);
        const DenseMatrix a = problem.A(x);
        for (std::size_t i = 0; i < m; ++i) {
            if (!(a(i, i) > 0.0)) {
                throw std::invalid_argument("check_gamma: a_ii must be positive (row " + std::to_string(i) +
                                            ", x=" + std::to_string(x) + ")");
            }
            min_diag = std::min(min_diag, a(i, i));
            for (std::size_t j = 0; j < m; ++j)
                if (i != j) ratio(i, j) = std::max(ratio(i, j), std::abs(a(i, j) / a(i, i)));
        }
    }

    StabilityReport r;
    DenseMatrix gamma = DenseMatrix::identity(m);
    double zeta = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            gamma(i, j) = -ratio(i, j);
            row += ratio(i, j);
        }
        zeta = std::max(zeta, row);
    }
    r.gamma = inverse_monotone(gamma);
    r.zeta = zeta;
    r.diag_dominant = zeta < 1.0;
    if (problem.kind == ProblemKind::ReactionDiffusion && r.diag_dominant) {
        r.kappa = std::sqrt((1.0 - zeta) * min_diag);
    }
    return r;
}

void check_upsilon(const SystemProblem& problem, StabilityReport& report, std::vector<double> C) {
    problem.validate();
    const std::size_t m = problem.M();
    if (problem.kind != ProblemKind::StronglyCoupled && problem.kind != ProblemKind::WeaklyCoupled) {
        throw std::invalid_argument("check_upsilon: needs a convection-diffusion problem");
    }
    if (C.empty()) C.assign(m, 1.0);
    if (C.size() != m) throw std::invalid_argument("check_upsilon: need one constant per equation");
    for (double c : C)
        if (!(c > 0.0)) throw std::invalid_argument("check_upsilon: constants must be positive");

    DenseMatrix l1(m, m);   // ||b'_ij + a_ij||_L1, trapezoid rule on the sample grid
    DenseMatrix sup(m, m);  // ||b_ij||_inf
    const bool constant = problem.B->is_constant() && problem.A.is_constant();
    if (constant) {
        const DenseMatrix a = problem.A(0.0);
        const DenseMatrix b = problem.convection(0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                l1(i, j) = std::abs(a(i, j));
                sup(i, j) = std::abs(b(i, j));
            }
    } else {
        const double dx = 1.0 / static_cast<double>(kCoefficientSamples - 1);
        for (std::size_t s = 0; s < kCoefficientSamples; ++s) {
            const double x = sample_x(s);
            const double w = (s == 0 || s + 1 == kCoefficientSamples) ? 0.5 * dx : dx;
            const DenseMatrix b = problem.convection(x);
            const DenseMatrix g = problem.convection_derivative(x) + problem.A(x);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j) {
                    l1(i, j) += w * std::abs(g(i, j));
                    sup(i, j) = std::max(sup(i, j), std::abs(b(i, j)));
                }
        }
    }
    DenseMatrix ups = DenseMatrix::identity(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (i != j) ups(i, j) = -C[i] * (l1(i, j) + sup(i, j));
    report.upsilon = inverse_monotone(ups);
    report.upsilon_constants = C;
    report.upsilon_heuristic = true;
}

StabilityReport check_stability(const SystemProblem& problem, std::vector<double> C) {
    StabilityReport r;
    try {
        r = check_gamma(problem);
    } catch (const std::invalid_argument& e) {
        // Gamma is undefined without a positive reaction diagonal; report and go on.
        r.gamma.matrix = DenseMatrix::identity(problem.M());
        r.gamma.inverse_nonnegative = false;
        r.gamma.reason = e.what();
    }
    if (problem.kind != ProblemKind::ReactionDiffusion) check_upsilon(problem, r, std::move(C));
    return r;
}

}  // namespace spbvp
