#include "spbvp/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace spbvp {

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::SimpleUpwind: return "upwind";
        case Scheme::MidpointUpwind: return "midpoint_upwind";
        case Scheme::Central: return "central";
        case Scheme::Ias: return "ias";
        case Scheme::GalerkinFem: return "fem";
    }
    return "?";
}

Scheme parse_scheme(const std::string& s) {
    if (s == "upwind" || s == "simple_upwind") return Scheme::SimpleUpwind;
    if (s == "midpoint_upwind") return Scheme::MidpointUpwind;
    if (s == "central") return Scheme::Central;
    if (s == "ias") return Scheme::Ias;
    if (s == "fem" || s == "galerkin") return Scheme::GalerkinFem;
    throw std::invalid_argument("unknown scheme '" + s + "'");
}

DiffOps diff_ops(const Mesh1D& mesh, std::size_t i) {
    if (i < 1 || i + 1 > mesh.cells()) throw std::out_of_range("diff_ops: need 1 <= i <= N-1");
    const double hm = mesh.h(i);
    const double hp = mesh.h(i + 1);
    const double c = 2.0 / (hm + hp);
    DiffOps d;
    d.dplus = {0.0, -1.0 / hp, 1.0 / hp};
    d.dminus = {-1.0 / hm, 1.0 / hm, 0.0};
    d.dzero = {-1.0 / (hm + hp), 0.0, 1.0 / (hm + hp)};
    d.dplusdminus = {c / hm, -(c / hm + c / hp), c / hp};
    return d;
}

namespace {

DiscreteOperator skeleton(const SystemProblem& p, const Mesh1D& mesh) {
    p.validate();
    if (mesh.cells() < 2) throw std::invalid_argument("assemble: mesh needs at least two cells");
    const std::size_t m = p.M();
    const std::size_t n = mesh.nodes();
    DiscreteOperator op;
    op.M = m;
    op.matrix = BlockTridiag(n, m);
    op.rhs.assign(n * m, 0.0);
    op.matrix.main.front() = DenseMatrix::identity(m);
    op.matrix.main.back() = DenseMatrix::identity(m);
    for (std::size_t k = 0; k < m; ++k) {
        op.rhs[k] = p.g0[k];
        op.rhs[(n - 1) * m + k] = p.g1[k];
    }
    return op;
}

// Adds coef * stencil to entry (k, j) of the three blocks of row i.
void add_stencil(DiscreteOperator& op, std::size_t i, std::size_t k, std::size_t j, double coef, const Stencil& s) {
    op.matrix.lower[i - 1](k, j) += coef * s[0];
    op.matrix.main[i](k, j) += coef * s[1];
    op.matrix.upper[i](k, j) += coef * s[2];
}

void warn_sign_changes(const SystemProblem& p, const Mesh1D& mesh, DiscreteOperator& op) {
    if (!p.B) return;
    for (std::size_t k = 0; k < p.M(); ++k) {
        bool pos = false, neg = false;
        for (std::size_t i = 1; i < mesh.cells(); ++i) {
            const double b = (*p.B)(mesh.x(i))(k, k);
            pos = pos || b > 0.0;
            neg = neg || b < 0.0;
        }
        if (pos && neg) {
            op.warnings.push_back("b_" + std::to_string(k + 1) + std::to_string(k + 1) +
                                  " changes sign on the mesh; upwind direction chosen per node");
        }
    }
}

DiscreteOperator assemble_fd(const SystemProblem& p, const Mesh1D& mesh, Scheme scheme) {
    DiscreteOperator op = skeleton(p, mesh);
    const std::size_t m = p.M();
    if (scheme == Scheme::SimpleUpwind || scheme == Scheme::MidpointUpwind) warn_sign_changes(p, mesh, op);
    for (std::size_t i = 1; i < mesh.cells(); ++i) {
        const DiffOps d = diff_ops(mesh, i);
        const double x = mesh.x(i);
        for (std::size_t k = 0; k < m; ++k) add_stencil(op, i, k, k, -p.diffusion[k], d.dplusdminus);

        if (scheme == Scheme::MidpointUpwind) {
            const double xl = 0.5 * (mesh.x(i - 1) + x);
            const double xr = 0.5 * (x + mesh.x(i + 1));
            const DenseMatrix b0 = p.convection(x);
            const DenseMatrix bl = p.convection(xl), br = p.convection(xr);
            const DenseMatrix al = p.A(xl), ar = p.A(xr);
            const auto fl = p.f(xl), fr = p.f(xr);
            for (std::size_t k = 0; k < m; ++k) {
                const bool backward = b0(k, k) >= 0.0;
                const DenseMatrix& b = backward ? bl : br;
                const DenseMatrix& a = backward ? al : ar;
                const Stencil& dir = backward ? d.dminus : d.dplus;
                const Stencil avg = backward ? Stencil{0.5, 0.5, 0.0} : Stencil{0.0, 0.5, 0.5};
                for (std::size_t j = 0; j < m; ++j) {
                    add_stencil(op, i, k, j, b(k, j), dir);
                    add_stencil(op, i, k, j, a(k, j), avg);
                }
                op.rhs[i * m + k] = backward ? fl[k] : fr[k];
            }
            continue;
        }

        const DenseMatrix b = p.convection(x);
        const DenseMatrix a = p.A(x);
        const auto f = p.f(x);
        for (std::size_t k = 0; k < m; ++k) {
            const Stencil& conv =
                scheme == Scheme::Central ? d.dzero : (b(k, k) >= 0.0 ? d.dminus : d.dplus);
            for (std::size_t j = 0; j < m; ++j) {
                if (b(k, j) != 0.0) add_stencil(op, i, k, j, b(k, j), conv);
                op.matrix.main[i](k, j) += a(k, j);
            }
            op.rhs[i * m + k] = f[k];
        }
    }
    return op;
}

DiscreteOperator assemble_fem(const SystemProblem& p, const Mesh1D& mesh) {
    DiscreteOperator op = skeleton(p, mesh);
    const std::size_t m = p.M();
    const std::size_t N = mesh.cells();
    const bool constant = (!p.B || p.B->is_constant()) && p.A.is_constant() && p.f.is_constant();
    const double g = 0.5 / std::sqrt(3.0);

    // Local element blocks: loc[p][q] couples test function p with trial function q (0 = left, 1 = right).
    for (std::size_t c = 1; c <= N; ++c) {
        const double a0 = mesh.x(c - 1);
        const double h = mesh.h(c);
        DenseMatrix loc[2][2] = {{DenseMatrix(m, m), DenseMatrix(m, m)}, {DenseMatrix(m, m), DenseMatrix(m, m)}};
        std::vector<double> load[2] = {std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
        for (std::size_t k = 0; k < m; ++k) {
            const double s = p.diffusion[k] / h;
            loc[0][0](k, k) += s;
            loc[1][1](k, k) += s;
            loc[0][1](k, k) -= s;
            loc[1][0](k, k) -= s;
        }
        const double dphi[2] = {-1.0 / h, 1.0 / h};
        if (constant) {
            const DenseMatrix b = p.convection(0.0);
            const DenseMatrix a = p.A(0.0);
            const auto f = p.f(0.0);
            const double mass[2][2] = {{h / 3.0, h / 6.0}, {h / 6.0, h / 3.0}};
            for (int tp = 0; tp < 2; ++tp) {
                for (int tq = 0; tq < 2; ++tq)
                    for (std::size_t k = 0; k < m; ++k)
                        for (std::size_t j = 0; j < m; ++j)
                            loc[tp][tq](k, j) += 0.5 * h * dphi[tq] * b(k, j) + mass[tp][tq] * a(k, j);
                for (std::size_t k = 0; k < m; ++k) load[tp][k] += 0.5 * h * f[k];
            }
        } else {
            for (double t : {0.5 - g, 0.5 + g}) {
                const double x = a0 + t * h;
                const double w = 0.5 * h;
                const double phi[2] = {1.0 - t, t};
                const DenseMatrix b = p.convection(x);
                const DenseMatrix a = p.A(x);
                const auto f = p.f(x);
                for (int tp = 0; tp < 2; ++tp) {
                    for (int tq = 0; tq < 2; ++tq)
                        for (std::size_t k = 0; k < m; ++k)
                            for (std::size_t j = 0; j < m; ++j)
                                loc[tp][tq](k, j) +=
                                    w * phi[tp] * (dphi[tq] * b(k, j) + phi[tq] * a(k, j));
                    for (std::size_t k = 0; k < m; ++k) load[tp][k] += w * phi[tp] * f[k];
                }
            }
        }
        // Scatter into interior rows c-1 (test fn on the left end) and c (right end).
        if (c - 1 >= 1) {
            const std::size_t i = c - 1;
            op.matrix.main[i] = op.matrix.main[i] + loc[0][0];
            op.matrix.upper[i] = op.matrix.upper[i] + loc[0][1];
            for (std::size_t k = 0; k < m; ++k) op.rhs[i * m + k] += load[0][k];
        }
        if (c <= N - 1) {
            const std::size_t i = c;
            op.matrix.main[i] = op.matrix.main[i] + loc[1][1];
            op.matrix.lower[i - 1] = op.matrix.lower[i - 1] + loc[1][0];
            for (std::size_t k = 0; k < m; ++k) op.rhs[i * m + k] += load[1][k];
        }
    }
    return op;
}

}  // namespace

DiscreteOperator assemble(const SystemProblem& problem, const Mesh1D& mesh, Scheme scheme) {
    switch (scheme) {
        case Scheme::Ias: return ias_assemble(problem, mesh);
        case Scheme::GalerkinFem: return assemble_fem(problem, mesh);
        default: return assemble_fd(problem, mesh, scheme);
    }
}

double fitting_factor_minus_one(double rho) {
    const double r = std::abs(rho);
    if (r < 1e-4) {
        const double r2 = r * r;
        return r2 / 3.0 - r2 * r2 / 45.0;
    }
    if (r > 20.0) return r - 1.0;  // coth(r) == 1 in double precision
    return r / std::tanh(r) - 1.0;
}

DiscreteOperator ias_assemble(const SystemProblem& problem, const Mesh1D& mesh, IasOptions opt) {
    if (!mesh.is_uniform(1e-10)) throw std::invalid_argument("ias_assemble: needs a uniform mesh");
    if (problem.kind == ProblemKind::ReactionDiffusion) {
        throw std::invalid_argument("ias_assemble: needs a convection-diffusion problem");
    }
    for (double d : problem.diffusion) {
        if (d != problem.diffusion.front()) {
            throw std::invalid_argument("ias_assemble: needs one common diffusion coefficient");
        }
    }
    DiscreteOperator op = assemble_fd(problem, mesh, Scheme::Central);
    const std::size_t m = problem.M();
    const double eps = problem.diffusion.front();
    for (std::size_t i = 1; i < mesh.cells(); ++i) {
        const DenseMatrix b = problem.convection(mesh.x(i));
        if (b.symmetry_residual() > 1e-10) {
            throw std::invalid_argument("ias_assemble: B(x) is not symmetric at node " + std::to_string(i));
        }
        const EigenPair e = jacobi_eigh(b, 1e-12);
        const double h = 0.5 * (mesh.h(i) + mesh.h(i + 1));
        // -eps P diag(sigma - 1) P^T, added on top of the central diffusion term.
        DenseMatrix corr(m, m);
        for (std::size_t j = 0; j < m; ++j) {
            const double s1 = opt.unit_fitting ? 0.0 : fitting_factor_minus_one(e.values[j] * h / (2.0 * eps));
            if (s1 == 0.0) continue;
            for (std::size_t r = 0; r < m; ++r)
                for (std::size_t c = 0; c < m; ++c) corr(r, c) += s1 * e.vectors(r, j) * e.vectors(c, j);
        }
        const DiffOps d = diff_ops(mesh, i);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < m; ++c)
                if (corr(r, c) != 0.0) add_stencil(op, i, r, c, -eps * corr(r, c), d.dplusdminus);
    }
    return op;
}

std::vector<double> apply(const DiscreteOperator& op, const std::vector<double>& v) {
    return block_apply(op.matrix, v);
}

double energy_norm(const Mesh1D& mesh, std::span<const double> v, double eps) {
    if (v.size() != mesh.nodes()) throw std::invalid_argument("energy_norm: value count mismatch");
    double s = 0.0;
    for (std::size_t k = 1; k <= mesh.cells(); ++k) {
        const double h = mesh.h(k);
        const double a = v[k - 1], b = v[k];
        s += eps * (b - a) * (b - a) / h + h * (a * a + a * b + b * b) / 3.0;
    }
    return std::sqrt(s);
}

std::vector<double> DiscreteSolution::component(std::size_t k) const {
    std::vector<double> out(mesh.nodes());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(i, k);
    return out;
}

DiscreteSolution solve(const DiscreteOperator& op, const Mesh1D& mesh, std::string problem, std::string scheme) {
    if (op.nodes() != mesh.nodes()) throw std::invalid_argument("solve: operator and mesh sizes differ");
    const std::size_t m = op.M;
    const std::size_t n = mesh.nodes();
    DiscreteSolution sol{mesh, m, block_thomas(op.matrix, op.rhs), std::move(problem), std::move(scheme), 0.0};
    auto force_boundary = [&] {
        for (std::size_t k = 0; k < m; ++k) {
            sol.values[k] = op.rhs[k];
            sol.values[(n - 1) * m + k] = op.rhs[(n - 1) * m + k];
        }
    };
    std::vector<double> row_norm(n * m, 0.0);
    double rhs_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < m; ++k) {
            double row = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                row += std::abs(op.matrix.main[i](k, j));
                if (i > 0) row += std::abs(op.matrix.lower[i - 1](k, j));
                if (i + 1 < n) row += std::abs(op.matrix.upper[i](k, j));
            }
            row_norm[i * m + k] = row;
            rhs_norm = std::max(rhs_norm, std::abs(op.rhs[i * m + k]) / row);
        }
    }
    const double tol = 1e-10 * (1.0 + rhs_norm);
    // Residual of the system with every row scaled to unit 1-norm; the
    // unscaled defect is left in `defect`.
    std::vector<double> defect(n * m);
    auto residual = [&] {
        const auto r = spbvp::apply(op, sol.values);
        double res = 0.0;
        for (std::size_t idx = 0; idx < n * m; ++idx) {
            defect[idx] = op.rhs[idx] - r[idx];
            res = std::max(res, std::abs(defect[idx]) / row_norm[idx]);
        }
        return res;
    };
    force_boundary();
    double res = residual();
    // Elimination without pivoting loses digits on strongly convection-dominated
    // rows; a few steps of iterative refinement recover them.
    for (int step = 0; step < 3 && !(res <= tol); ++step) {
        const auto dx = block_thomas(op.matrix, defect);
        for (std::size_t idx = 0; idx < n * m; ++idx) sol.values[idx] += dx[idx];
        force_boundary();
        res = residual();
    }
    sol.residual = res;
    if (!(res <= tol)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "solve: equilibrated residual %.3e exceeds the solver contract %.3e", res, tol);
        throw std::runtime_error(buf);
    }
    return sol;
}

DiscreteSolution solve(const SystemProblem& problem, const Mesh1D& mesh, Scheme scheme) {
    return solve(assemble(problem, mesh, scheme), mesh, problem.name, to_string(scheme));
}

}  // namespace spbvp
