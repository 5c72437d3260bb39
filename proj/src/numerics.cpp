#include "spbvp/numerics.hpp"

#include <array>
#include <cmath>

namespace spbvp {

RootResult safeguarded_newton(const std::function<double(double)>& f,
                              const std::function<double(double)>& df,
                              double lo, double hi, RootOptions opt) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return {lo, 0.0, 0};
    if (fhi == 0.0) return {hi, 0.0, 0};
    if ((flo > 0.0) == (fhi > 0.0)) {
        throw BracketError("no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    // Orient so that f(lo) < 0 < f(hi).
    if (flo > 0.0) std::swap(lo, hi);

    double x = 0.5 * (lo + hi);
    double fx = f(x);
    for (int it = 1; it <= opt.max_iter; ++it) {
        if (fx == 0.0) return {x, 0.0, it};
        if (fx < 0.0) lo = x; else hi = x;

        const double d = df(x);
        double next = (d != 0.0 && std::isfinite(d)) ? x - fx / d : NAN;
        const double a = std::min(lo, hi);
        const double b = std::max(lo, hi);
        const bool newton_ok = std::isfinite(next) && next > a && next < b;
        if (!newton_ok) next = 0.5 * (lo + hi);

        const double step = std::abs(next - x);
        x = next;
        fx = f(x);
        if (step <= opt.x_tol || std::abs(b - a) <= opt.x_tol) {
            // One polishing Newton step brings the residual to round-off level.
            const double d2 = df(x);
            if (d2 != 0.0 && std::isfinite(d2)) {
                const double polished = x - fx / d2;
                if (polished >= a && polished <= b) {
                    const double fp = f(polished);
                    if (std::abs(fp) <= std::abs(fx)) return {polished, fp, it + 1};
                }
            }
            return {x, fx, it};
        }
    }
    throw std::runtime_error("safeguarded_newton: no convergence after " +
                             std::to_string(opt.max_iter) + " iterations");
}

namespace {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double kronrod;
    double gauss;
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double k = fc * kWgk[7];
    double g = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double s = f(c - dx) + f(c + dx);
        k += kWgk[j] * s;
        if (j % 2 == 1) g += kWg[j / 2] * s;
    }
    return {k * h, g * h};
}

void refine(const std::function<double(double)>& f, double a, double b, double rel_tol,
            double abs_tol, int depth, QuadratureResult& acc) {
    const Panel p = gk15(f, a, b);
    const double err = std::abs(p.kronrod - p.gauss);
    if (err <= std::max(rel_tol * std::abs(p.kronrod), abs_tol) || b - a <= 4.0 * std::abs(a) * 2.3e-16) {
        acc.value += p.kronrod;
        acc.error += err;
        return;
    }
    if (depth <= 0) {
        acc.value += p.kronrod;
        acc.error += err;
        acc.converged = false;
        return;
    }
    const double m = 0.5 * (a + b);
    refine(f, a, m, rel_tol, abs_tol, depth - 1, acc);
    refine(f, m, b, rel_tol, abs_tol, depth - 1, acc);
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double rel_tol, double abs_tol, int max_depth) {
    QuadratureResult acc{0.0, 0.0, true};
    if (b <= a) return acc;
    refine(f, a, b, rel_tol, abs_tol, max_depth, acc);
    return acc;
}

}  // namespace spbvp
