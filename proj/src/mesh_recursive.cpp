// Recursively defined meshes (Gartland, Duran-Lombardi) and monitor-function
// equidistribution.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "spbvp/mesh.hpp"
#include "spbvp/numerics.hpp"

namespace spbvp {

namespace {

std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Mesh1D place_recursive(std::vector<double> pts, LayerSide side, std::string label) {
    Mesh1D m(std::move(pts), std::move(label));
    if (side == LayerSide::Left) return m;
    if (side == LayerSide::Right) return mirror(m).relabeled(m.label());
    throw std::invalid_argument("recursive meshes support only a left or a right layer");
}

constexpr std::size_t kMaxRecursivePoints = 50'000'000;

}  // namespace

Mesh1D gartland(const LayerSpec& spec, double H, GartlandVariant variant) {
    spec.validate();
    if (!(H > 0.0 && H < 1.0)) throw std::invalid_argument("gartland: H must lie in (0, 1)");
    const double eps = spec.eps;
    const double gamma = spec.gamma;
    const bool capped = variant == GartlandVariant::Gartland;

    std::vector<double> pts{0.0};
    double x = 0.0;
    double h_prev = 0.0;
    for (;;) {
        double h = std::min(H, eps * H * std::exp(gamma * x / (2.0 * eps)));
        if (capped && h_prev > 0.0) h = std::min(h, std::numbers::e * h_prev);
        if (x + h >= 1.0) break;
        x += h;
        h_prev = h;
        pts.push_back(x);
        if (pts.size() > kMaxRecursivePoints) throw std::runtime_error("gartland: mesh too large");
    }
    // A remainder shorter than h_last/e is merged with the last cell and the
    // pair is split evenly, so neighbouring cells stay within a factor e.
    const double remainder = 1.0 - pts.back();
    if (pts.size() >= 2) {
        const double h_last = pts.back() - pts[pts.size() - 2];
        if (remainder < h_last / std::numbers::e) {
            pts.pop_back();
            pts.push_back(pts.back() + 0.5 * (1.0 - pts.back()));
        }
    }
    pts.push_back(1.0);
    const std::string family = capped ? "gartland" : "gartland_type";
    return place_recursive(std::move(pts), spec.side,
                           family + "(eps=" + fmt_num(eps) + ",gamma=" + fmt_num(gamma) + ",H=" + fmt_num(H) +
                               ",side=" + to_string(spec.side) + ")");
}

Mesh1D duran_lombardi(const LayerSpec& spec, double H, double kappa, DuranLombardiVariant variant) {
    spec.validate();
    const double kh = kappa * H;
    if (!(H > 0.0) || !(kappa > 0.0) || !(kh < 1.0)) {
        throw std::invalid_argument("duran_lombardi: need H > 0, kappa > 0 and kappa*H < 1");
    }
    const double first = kh * spec.eps;
    if (!(first < 1.0)) throw std::invalid_argument("duran_lombardi: kappa*H*eps must be below 1");

    std::vector<double> pts{0.0};
    if (variant == DuranLombardiVariant::InitialUniform) {
        const auto n_uniform = static_cast<std::size_t>(std::floor(1.0 / kh)) + 1;
        for (std::size_t i = 1; i <= n_uniform; ++i) {
            const double x = static_cast<double>(i) * first;
            if (x >= 1.0) break;
            pts.push_back(x);
        }
    } else {
        pts.push_back(first);
    }
    while (pts.back() * (1.0 + kh) < 1.0) {
        pts.push_back(pts.back() + kh * pts.back());
        if (pts.size() > kMaxRecursivePoints) throw std::runtime_error("duran_lombardi: mesh too large");
    }
    // Drop the last interior node when the closing cell would be under half its neighbour.
    if (pts.size() >= 3) {
        const double last = 1.0 - pts.back();
        const double prev = pts.back() - pts[pts.size() - 2];
        if (last < 0.5 * prev) pts.pop_back();
    }
    pts.push_back(1.0);
    const std::string family =
        variant == DuranLombardiVariant::Geometric ? "duran_lombardi" : "duran_lombardi_uniform_start";
    return place_recursive(std::move(pts), spec.side,
                           family + "(eps=" + fmt_num(spec.eps) + ",H=" + fmt_num(H) + ",kappa=" +
                               fmt_num(kappa) + ",side=" + to_string(spec.side) + ")");
}

// ---------------------------------------------------------------------------
// Equidistribution

Monitor bakhvalov_monitor(const LayerSpec& spec, double K) {
    spec.validate();
    if (!(K > 0.0)) throw std::invalid_argument("bakhvalov_monitor: K must be positive");
    const double amp = K * spec.gamma / spec.eps;
    const double rate = spec.gamma / spec.scale();
    if (spec.side == LayerSide::Left) {
        return [=](double s) { return std::max(1.0, amp * std::exp(-rate * s)); };
    }
    if (spec.side == LayerSide::Right) {
        return [=](double s) { return std::max(1.0, amp * std::exp(-rate * (1.0 - s))); };
    }
    return [=](double s) {
        return std::max({1.0, amp * std::exp(-rate * s), amp * std::exp(-rate * (1.0 - s))});
    };
}

namespace {

// Cell integrals are taken over the union of the new nodes and the previous
// ones, so a layer resolved by the old mesh cannot slip between quadrature
// nodes of a wide new cell.
double equidistribution_residual(const Monitor& monitor, const Mesh1D& mesh, const Mesh1D& previous) {
    std::vector<double> cell(mesh.cells(), 0.0);
    std::size_t j = 0;
    for (std::size_t k = 1; k <= mesh.cells(); ++k) {
        double a = mesh.x(k - 1);
        const double b = mesh.x(k);
        while (j < previous.cells() && previous.x(j) <= a) ++j;
        for (; j < previous.cells() && previous.x(j) < b; ++j) {
            cell[k - 1] += integrate_adaptive(monitor, a, previous.x(j), 1e-13).value;
            a = previous.x(j);
        }
        cell[k - 1] += integrate_adaptive(monitor, a, b, 1e-13).value;
    }
    double total = 0.0;
    for (double c : cell) total += c;
    const double mean = total / static_cast<double>(mesh.cells());
    double r = 0.0;
    for (double c : cell) r = std::max(r, std::abs(c - mean) / mean);
    return r;
}

}  // namespace

EquidistributionResult equidistribute(const Monitor& monitor, std::size_t N, int max_iter, double tol) {
    if (!monitor) throw std::invalid_argument("equidistribute: empty monitor");
    if (N < 1) throw std::invalid_argument("equidistribute: N must be positive");
    if (max_iter < 1) throw std::invalid_argument("equidistribute: max_iter must be positive");
    constexpr std::size_t kBackgroundCap = 1u << 22;

    Mesh1D current = Mesh1D::uniform(N);
    EquidistributionResult best{current, 0, INFINITY, false};
    std::size_t sub = 16;

    std::vector<double> y, cum;
    for (int iter = 1; iter <= max_iter; ++iter) {
        const std::size_t per_cell = std::max<std::size_t>(2, std::min(sub, kBackgroundCap / N));
        y.clear();
        y.push_back(0.0);
        for (std::size_t k = 1; k <= N; ++k) {
            const double a = current.x(k - 1);
            const double b = current.x(k);
            for (std::size_t j = 1; j < per_cell; ++j) {
                y.push_back(a + (b - a) * static_cast<double>(j) / static_cast<double>(per_cell));
            }
            y.push_back(b);
        }
        cum.assign(y.size(), 0.0);
        double m_prev = monitor(y[0]);
        if (!(m_prev > 0.0) || !std::isfinite(m_prev)) throw std::invalid_argument("equidistribute: monitor must be positive");
        for (std::size_t j = 1; j < y.size(); ++j) {
            const double m = monitor(y[j]);
            if (!(m > 0.0) || !std::isfinite(m)) {
                throw std::invalid_argument("equidistribute: monitor must be positive and finite");
            }
            cum[j] = cum[j - 1] + 0.5 * (m + m_prev) * (y[j] - y[j - 1]);
            m_prev = m;
        }
        const double total = cum.back();

        std::vector<double> pts(N + 1);
        pts[0] = 0.0;
        pts[N] = 1.0;
        std::size_t j = 0;
        for (std::size_t k = 1; k < N; ++k) {
            const double target = total * static_cast<double>(k) / static_cast<double>(N);
            while (j + 1 < cum.size() && cum[j + 1] < target) ++j;
            const double w = (target - cum[j]) / (cum[j + 1] - cum[j]);
            pts[k] = y[j] + w * (y[j + 1] - y[j]);
        }
        Mesh1D next(std::move(pts), "equidistributed(N=" + std::to_string(N) + ")");
        const double r = equidistribution_residual(monitor, next, current);
        current = std::move(next);
        if (r < best.residual) best = {current, iter, r, false};
        if (r <= tol) {
            best.converged = true;
            best.iterations = iter;
            return best;
        }
        sub *= 2;
    }
    best.iterations = max_iter;
    return best;
}

EquidistributionResult equidistribute_layer(const LayerSpec& spec, std::size_t N, double K, int max_iter,
                                            double tol) {
    if (spec.side != LayerSide::Right) return equidistribute(bakhvalov_monitor(spec, K), N, max_iter, tol);
    LayerSpec left = spec;
    left.side = LayerSide::Left;
    EquidistributionResult r = equidistribute(bakhvalov_monitor(left, K), N, max_iter, tol);
    r.mesh = mirror(r.mesh).relabeled(r.mesh.label());
    return r;
}

}  // namespace spbvp
