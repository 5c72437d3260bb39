#pragma once

// Two-point boundary value problems
//
//   -E u'' + B(x) u' + A(x) u = f(x),  u(0) = g0, u(1) = g1
//
// for M coupled components, plus stability pre-checks, layer envelopes and
// the built-in reference problems.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spbvp/linalg.hpp"
#include "spbvp/mesh.hpp"

namespace spbvp {

enum class ProblemKind { WeaklyCoupled, StronglyCoupled, ReactionDiffusion };

std::string to_string(ProblemKind kind);
ProblemKind parse_problem_kind(const std::string& s);

/// x -> M x M matrix. A constant tag lets norms be taken exactly.
class MatrixField {
public:
    MatrixField() = default;
    static MatrixField constant(DenseMatrix value);
    /// deriv may be empty; derivatives are then taken by central differences.
    static MatrixField function(std::size_t m, std::function<DenseMatrix(double)> eval,
                                std::function<DenseMatrix(double)> deriv = {});

    DenseMatrix operator()(double x) const;
    DenseMatrix derivative(double x) const;
    std::size_t size() const noexcept { return m_; }
    bool is_constant() const noexcept { return constant_.has_value(); }
    const std::optional<DenseMatrix>& constant_value() const noexcept { return constant_; }

    /// Row k scaled by s[k].
    MatrixField scaled_rows(const std::vector<double>& s) const;

private:
    std::size_t m_ = 0;
    std::function<DenseMatrix(double)> eval_;
    std::function<DenseMatrix(double)> deriv_;
    std::optional<DenseMatrix> constant_;
};

class VectorField {
public:
    VectorField() = default;
    static VectorField constant(std::vector<double> value);
    static VectorField function(std::size_t m, std::function<std::vector<double>(double)> eval);

    std::vector<double> operator()(double x) const;
    std::size_t size() const noexcept { return m_; }
    bool is_constant() const noexcept { return constant_.has_value(); }
    VectorField scaled_rows(const std::vector<double>& s) const;

private:
    std::size_t m_ = 0;
    std::function<std::vector<double>(double)> eval_;
    std::optional<std::vector<double>> constant_;
};

/// Hints for building layer-adapted meshes for a problem.
struct MeshHints {
    LayerSpec layer;                 // single-scale families
    std::vector<double> eps_list;    // ascending, for system_shishkin
    double system_sigma = 1.0;
    double system_beta = 1.0;
};

struct SystemProblem {
    std::string name;
    ProblemKind kind = ProblemKind::WeaklyCoupled;
    /// Perturbation parameters eps_k, one per component.
    std::vector<double> eps;
    /// Diffusion coefficient of each equation (eps_k, or eps_k^2 for reaction-diffusion).
    std::vector<double> diffusion;
    std::optional<MatrixField> B;
    MatrixField A;
    VectorField f;
    std::vector<double> g0, g1;
    MeshHints hints;

    std::size_t M() const noexcept { return diffusion.size(); }
    /// B(x), or the zero matrix for reaction-diffusion problems.
    DenseMatrix convection(double x) const;
    DenseMatrix convection_derivative(double x) const;

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
    /// Equation k multiplied by s[k] > 0. Solutions are unchanged.
    SystemProblem scaled_rows(const std::vector<double>& s) const;
};

enum class ReferenceKind { Exact, Asymptotic, FineMeshOracle };

std::string to_string(ReferenceKind kind);

struct ReferenceSolution {
    ReferenceKind kind = ReferenceKind::Exact;
    std::size_t M = 1;
    std::function<std::vector<double>(double)> value;
    /// Optional closed-form derivative.
    std::function<std::vector<double>(double)> derivative;
    /// Free-form description (defect order, oracle provenance).
    std::string note;
    std::optional<std::size_t> n_ref;
    std::string oracle_mesh;

    std::vector<double> operator()(double x) const { return value(x); }

    /// Piecewise-linear interpolant of nodal values (row-major, node-major).
    static ReferenceSolution from_nodal(const Mesh1D& mesh, std::vector<double> values, std::size_t M,
                                        std::string note);
};

/// Sum of layer terms; evaluates 1 + sum_m scale_m^{-k} exp(-rate_m d(x) / scale_m).
struct LayerEnvelope {
    struct Term {
        double scale;
        double rate;
        LayerSide side;
    };
    std::vector<Term> terms;

    double operator()(double x, int k) const;

    /// 1 + eps^{-k} e^{-beta d/eps} for a convection layer.
    static LayerEnvelope convection(double eps, double beta, LayerSide side);
    /// 1 + sum_m eps_m^{-k} B_{eps_m}(x) with B_eps = e^{-kappa x/eps} + e^{-kappa(1-x)/eps}.
    static LayerEnvelope reaction_diffusion(const std::vector<double>& eps, double kappa);
};

struct MatrixCheck {
    DenseMatrix matrix;
    bool inverse_nonnegative = false;
    double min_inverse_entry = 0.0;
    std::string reason;
};

struct StabilityReport {
    MatrixCheck gamma;
    bool diag_dominant = false;
    double zeta = 0.0;
    std::optional<double> kappa;
    std::optional<MatrixCheck> upsilon;
    std::vector<double> upsilon_constants;
    bool upsilon_heuristic = true;
};

inline constexpr std::size_t kCoefficientSamples = 10000;

/// Gamma matrix with gamma_ij = -||a_ij / a_ii||_inf; sup-norms are sampled.
StabilityReport check_gamma(const SystemProblem& problem);
/// Fills the upsilon fields of report; C defaults to all ones.
void check_upsilon(const SystemProblem& problem, StabilityReport& report, std::vector<double> C = {});
StabilityReport check_stability(const SystemProblem& problem, std::vector<double> C = {});

/// Smallest C with |u_k^{(order)}| <= C env(x, order) on a graded sample grid.
double envelope_check(const ReferenceSolution& ref, std::size_t component, const LayerEnvelope& env, int order);

// ---------------------------------------------------------------------------
// Built-in problems

struct ProblemInstance {
    SystemProblem problem;
    ReferenceSolution reference;
    LayerEnvelope envelope;
};

/// -eps u1'' - 3u1' - 4u2' = 1, -eps u2'' - 4u1' + 3u2' = 2 with the asymptotic solution.
ProblemInstance builtin_strongly_coupled_example(double eps);
/// -eps u'' + u' = 1, u(0) = u(1) = 0, exact solution.
ProblemInstance builtin_scalar_cd(double eps);
/// -diag(eps_k^2) u'' + A u = f with a_ii = 2, a_ij = -1/(2M), f_i = i, zero boundary data.
/// The reference is a central-difference solution on a mirrored system Shishkin mesh with n_ref cells.
ProblemInstance builtin_reaction_diffusion_system(std::vector<double> eps, std::size_t n_ref);
/// -diag(eps) u'' + u' + [[2,-1],[-1,2]] u = (e^x, 1 + x^2), layers at x = 1.
/// The reference is an upwind solution on a system Shishkin mesh with n_ref cells.
ProblemInstance builtin_weakly_coupled_cd(std::vector<double> eps, std::size_t n_ref);

/// eps_k = eps^{(M-k+1)/M}, k = 1..M (so M = 2 gives (eps, sqrt(eps))).
std::vector<double> graded_eps_list(double eps, std::size_t M);

/// Names accepted by make_builtin.
std::vector<std::string> builtin_names();
/// Builds a named built-in for a given eps. Oracles use n_ref cells.
ProblemInstance make_builtin(const std::string& name, double eps, std::size_t n_ref);

}  // namespace spbvp
