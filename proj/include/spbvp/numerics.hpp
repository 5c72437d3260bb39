#pragma once

// Scalar root finding and adaptive quadrature shared by the mesh, problem
// and harness modules.

#include <functional>
#include <stdexcept>
#include <string>

namespace spbvp {

struct RootResult {
    double x = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

/// Raised when [lo, hi] does not bracket a sign change.
class BracketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RootOptions {
    double x_tol = 1e-12;
    int max_iter = 200;
};

/// Newton's method safeguarded by bisection. `f` and `df` evaluate the
/// function and its derivative. Throws BracketError if f(lo) and f(hi)
/// have the same strict sign, std::runtime_error after max_iter steps.
RootResult safeguarded_newton(const std::function<double(double)>& f,
                              const std::function<double(double)>& df,
                              double lo, double hi, RootOptions opt = {});

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = true;
};

/// Adaptive Gauss-Kronrod (7/15) on [a, b]. Stops subdividing a panel once
/// its error estimate is below max(rel_tol * |estimate on the panel|, abs_tol).
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double rel_tol = 1e-10, double abs_tol = 1e-300,
                                    int max_depth = 60);

}  // namespace spbvp
