#pragma once

// Finite-difference and linear finite-element discretizations on arbitrary meshes.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spbvp/linalg.hpp"
#include "spbvp/mesh.hpp"
#include "spbvp/problems.hpp"

namespace spbvp {

enum class Scheme { SimpleUpwind, MidpointUpwind, Central, Ias, GalerkinFem };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

/// Coefficients of (u_{i-1}, u_i, u_{i+1}).
using Stencil = std::array<double, 3>;

struct DiffOps {
    Stencil dplus;
    Stencil dminus;
    Stencil dzero;
    Stencil dplusdminus;
};

/// Difference quotients at interior node 1 <= i <= N-1.
DiffOps diff_ops(const Mesh1D& mesh, std::size_t i);

struct DiscreteOperator {
    std::size_t M = 1;
    /// N + 1 block rows; rows 0 and N are identity blocks.
    BlockTridiag matrix;
    std::vector<double> rhs;
    std::vector<std::string> warnings;

    std::size_t nodes() const noexcept { return matrix.size(); }
};

DiscreteOperator assemble(const SystemProblem& problem, const Mesh1D& mesh, Scheme scheme);

struct IasOptions {
    /// Replace every fitting factor by 1, which recovers the central scheme.
    bool unit_fitting = false;
};

/// Fitted scheme -eps P diag(sigma) P^T D+D- u + B D0 u + A u = f on a uniform mesh.
DiscreteOperator ias_assemble(const SystemProblem& problem, const Mesh1D& mesh, IasOptions opt = {});

/// sigma = rho coth rho, with a series near rho = 0. Returns sigma - 1.
double fitting_factor_minus_one(double rho);

std::vector<double> apply(const DiscreteOperator& op, const std::vector<double>& v);

/// Energy norm (eps |v|_1^2 + ||v||_0^2)^{1/2} of the piecewise-linear interpolant.
double energy_norm(const Mesh1D& mesh, std::span<const double> v, double eps);

struct DiscreteSolution {
    Mesh1D mesh;
    std::size_t M = 1;
    /// Node-major values, values[i * M + k].
    std::vector<double> values;
    std::string problem;
    std::string scheme;
    /// Max-norm residual of the row-equilibrated system.
    double residual = 0.0;

    double value(std::size_t i, std::size_t k) const { return values[i * M + k]; }
    std::vector<double> component(std::size_t k) const;
};

DiscreteSolution solve(const DiscreteOperator& op, const Mesh1D& mesh, std::string problem, std::string scheme);
DiscreteSolution solve(const SystemProblem& problem, const Mesh1D& mesh, Scheme scheme);

}  // namespace spbvp
