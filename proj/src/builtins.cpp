// Built-in reference problems.

#include <cmath>
#include <stdexcept>

#include "spbvp/discretize.hpp"
#include "spbvp/problems.hpp"

namespace spbvp {

namespace {

std::size_t round_up(std::size_t n, std::size_t multiple) { return (n + multiple - 1) / multiple * multiple; }

void check_eps_list(const std::vector<double>& eps) {
    if (eps.empty()) throw std::invalid_argument("need at least one eps");
    for (std::size_t k = 0; k < eps.size(); ++k) {
        if (!(eps[k] > 0.0)) throw std::invalid_argument("eps must be positive");
        if (k && eps[k] < eps[k - 1]) throw std::invalid_argument("eps list must be ascending");
    }
}

}  // namespace

std::vector<double> graded_eps_list(double eps, std::size_t M) {
    if (!(eps > 0.0) || M == 0) throw std::invalid_argument("graded_eps_list: need eps > 0 and M >= 1");
    std::vector<double> out(M);
    for (std::size_t k = 1; k <= M; ++k) {
        out[k - 1] = std::pow(eps, static_cast<double>(M - k + 1) / static_cast<double>(M));
    }
    return out;
}

ProblemInstance builtin_strongly_coupled_example(double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("strongly_coupled: eps must be positive");
    SystemProblem p;
    p.name = "strongly_coupled";
    p.kind = ProblemKind::StronglyCoupled;
    p.eps = {eps, eps};
    p.diffusion = {eps, eps};
    p.B = MatrixField::constant(DenseMatrix{{-3.0, -4.0}, {-4.0, 3.0}});
    p.A = MatrixField::constant(DenseMatrix(2, 2));
    p.f = VectorField::constant({1.0, 2.0});
    p.g0 = {0.0, 0.0};
    p.g1 = {0.0, 0.0};
    p.hints.layer = {eps, 5.0, 1.0, LayerSide::Both};
    p.hints.eps_list = {eps};
    p.hints.system_beta = 5.0;

    ReferenceSolution r;
    r.kind = ReferenceKind::Asymptotic;
    r.M = 2;
    r.note = "asymptotic solution, exponentially small terms dropped; defect treated as O(eps)";
    r.value = [eps](double x) {
        const double el = std::exp(-5.0 * x / eps);
        const double er = std::exp(-5.0 * (1.0 - x) / eps);
        return std::vector<double>{8.0 / 25 - 11.0 / 25 * x - 8.0 / 25 * el + 3.0 / 25 * er,
                                   4.0 / 25 + 2.0 / 25 * x - 4.0 / 25 * el - 6.0 / 25 * er};
    };
    r.derivative = [eps](double x) {
        const double el = 5.0 / eps * std::exp(-5.0 * x / eps);
        const double er = 5.0 / eps * std::exp(-5.0 * (1.0 - x) / eps);
        return std::vector<double>{-11.0 / 25 + 8.0 / 25 * el + 3.0 / 25 * er,
                                   2.0 / 25 + 4.0 / 25 * el - 6.0 / 25 * er};
    };
    return {std::move(p), std::move(r), LayerEnvelope::convection(eps, 5.0, LayerSide::Both)};
}

ProblemInstance builtin_scalar_cd(double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("scalar_cd: eps must be positive");
    SystemProblem p;
    p.name = "scalar_cd";
    p.kind = ProblemKind::WeaklyCoupled;
    p.eps = {eps};
    p.diffusion = {eps};
    p.B = MatrixField::constant(DenseMatrix{{1.0}});
    p.A = MatrixField::constant(DenseMatrix{{0.0}});
    p.f = VectorField::constant({1.0});
    p.g0 = {0.0};
    p.g1 = {0.0};
    p.hints.layer = {eps, 1.0, 1.0, LayerSide::Right};
    p.hints.eps_list = {eps};

    // u = x - (e^{-(1-x)/eps} - e^{-1/eps}) / (1 - e^{-1/eps})
    const double denom = -std::expm1(-1.0 / eps);
    const double tail = std::exp(-1.0 / eps);
    auto layer = [eps](double x) { return std::exp(-(1.0 - x) / eps); };
    ReferenceSolution r;
    r.kind = ReferenceKind::Exact;
    r.M = 1;
    r.note = "exact";
    r.value = [=](double x) { return std::vector<double>{x - (layer(x) - tail) / denom}; };
    r.derivative = [=](double x) { return std::vector<double>{1.0 - layer(x) / (eps * denom)}; };

    // Substitute back into the equation before handing the evaluator out.
    for (std::size_t s = 1; s < 1000; ++s) {
        const double x = static_cast<double>(s) / 1000.0;
        const double d1 = r.derivative(x)[0];
        const double d2 = -layer(x) / (eps * eps * denom);
        const double res = -eps * d2 + d1 - 1.0;
        if (std::abs(res) > 1e-10 * (1.0 + std::abs(eps * d2) + std::abs(d1))) {
            throw std::logic_error("scalar_cd: exact solution fails the residual check");
        }
    }
    return {std::move(p), std::move(r), LayerEnvelope::convection(eps, 1.0, LayerSide::Right)};
}

ProblemInstance builtin_reaction_diffusion_system(std::vector<double> eps, std::size_t n_ref) {
    check_eps_list(eps);
    const std::size_t m = eps.size();
    SystemProblem p;
    p.name = "reaction_diffusion";
    p.kind = ProblemKind::ReactionDiffusion;
    p.eps = eps;
    for (double e : eps) p.diffusion.push_back(e * e);
    DenseMatrix a(m, m, -1.0 / (2.0 * static_cast<double>(m)));
    std::vector<double> f(m);
    for (std::size_t i = 0; i < m; ++i) {
        a(i, i) = 2.0;
        f[i] = static_cast<double>(i + 1);
    }
    p.A = MatrixField::constant(a);
    p.f = VectorField::constant(f);
    p.g0.assign(m, 0.0);
    p.g1.assign(m, 0.0);

    const StabilityReport st = check_gamma(p);
    if (!st.kappa) throw std::logic_error("reaction_diffusion: A is not diagonally dominant");
    const double kappa = *st.kappa;
    p.hints.layer = {eps.front(), kappa, 2.0, LayerSide::Both};
    p.hints.eps_list = eps;
    p.hints.system_sigma = 2.0;
    p.hints.system_beta = kappa;

    const Mesh1D mesh = system_shishkin(eps, 2.0, kappa, round_up(n_ref, 2 * (m + 1)), LayerSide::Both);
    const DiscreteSolution sol = solve(p, mesh, Scheme::Central);
    ReferenceSolution r = ReferenceSolution::from_nodal(mesh, sol.values, m, "central scheme on " + mesh.label());
    return {std::move(p), std::move(r), LayerEnvelope::reaction_diffusion(eps, kappa)};
}

ProblemInstance builtin_weakly_coupled_cd(std::vector<double> eps, std::size_t n_ref) {
    check_eps_list(eps);
    if (eps.size() != 2) throw std::invalid_argument("weakly_coupled: needs exactly two eps values");
    SystemProblem p;
    p.name = "weakly_coupled";
    p.kind = ProblemKind::WeaklyCoupled;
    p.eps = eps;
    p.diffusion = eps;
    p.B = MatrixField::constant(DenseMatrix::identity(2));
    p.A = MatrixField::constant(DenseMatrix{{2.0, -1.0}, {-1.0, 2.0}});
    p.f = VectorField::function(2, [](double x) { return std::vector<double>{std::exp(x), 1.0 + x * x}; });
    p.g0 = {0.0, 0.0};
    p.g1 = {0.0, 0.0};
    p.hints.layer = {eps.front(), 1.0, 1.0, LayerSide::Right};
    p.hints.eps_list = eps;

    const Mesh1D mesh = system_shishkin(eps, 1.0, 1.0, round_up(n_ref, 3), LayerSide::Right);
    const DiscreteSolution sol = solve(p, mesh, Scheme::SimpleUpwind);
    ReferenceSolution r = ReferenceSolution::from_nodal(mesh, sol.values, 2, "upwind scheme on " + mesh.label());
    LayerEnvelope env{{{eps[0], 1.0, LayerSide::Right}, {eps[1], 1.0, LayerSide::Right}}};
    return {std::move(p), std::move(r), env};
}

std::vector<std::string> builtin_names() {
    return {"scalar_cd", "strongly_coupled", "reaction_diffusion", "weakly_coupled"};
}

ProblemInstance make_builtin(const std::string& name, double eps, std::size_t n_ref) {
    if (name == "scalar_cd") return builtin_scalar_cd(eps);
    if (name == "strongly_coupled") return builtin_strongly_coupled_example(eps);
    if (name == "reaction_diffusion") return builtin_reaction_diffusion_system(graded_eps_list(eps, 2), n_ref);
    if (name == "weakly_coupled") return builtin_weakly_coupled_cd(graded_eps_list(eps, 2), n_ref);
    throw std::invalid_argument("unknown built-in problem '" + name + "'");
}

}  // namespace spbvp
