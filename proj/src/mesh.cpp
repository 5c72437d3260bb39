#include "spbvp/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "spbvp/numerics.hpp"

namespace spbvp {

namespace {

constexpr double kUlp = std::numeric_limits<double>::epsilon();

std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string spec_label(const std::string& family, const LayerSpec& s, const std::string& extra) {
    return family + "(eps=" + fmt_num(s.eps) + ",gamma=" + fmt_num(s.gamma) + ",mu=" + fmt_num(s.mu) +
           (extra.empty() ? "" : "," + extra) + ",side=" + to_string(s.side) + ")";
}

void require_even_cells(std::size_t N, const char* who) {
    if (N < 4 || N % 2 != 0) {
        throw std::invalid_argument(std::string(who) + ": N must be even and >= 4, got " + std::to_string(N));
    }
}

/// Points generated for a layer at x = 0, placed according to the side.
Mesh1D place(std::vector<double> left_points, LayerSide side, std::string label) {
    Mesh1D m(std::move(left_points), std::move(label));
    switch (side) {
        case LayerSide::Left: return m;
        case LayerSide::Right: return mirror(m).relabeled(m.label());
        case LayerSide::Both: break;
    }
    throw std::invalid_argument("mesh family supports only a left or a right layer: " + m.label());
}

/// Glues a half mesh on [0, 1/2] to its reflection.
Mesh1D symmetric_from_half(const std::vector<double>& half, std::string label) {
    if (half.front() != 0.0 || half.back() != 0.5) {
        throw std::logic_error("symmetric_from_half: half mesh must span [0, 1/2]");
    }
    const std::size_t n = half.size() - 1;
    std::vector<double> pts(2 * n + 1), comp(2 * n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        pts[i] = half[i];
        comp[i] = 1.0 - half[i];
        pts[2 * n - i] = 1.0 - half[i];
        comp[2 * n - i] = half[i];
    }
    return Mesh1D(std::move(pts), std::move(comp), std::move(label));
}

std::vector<double> uniform_points(std::size_t N) {
    const Mesh1D u = Mesh1D::uniform(N);
    return {u.points().begin(), u.points().end()};
}

/// Appends N_coarse equal cells from points.back() to `end`.
void append_uniform(std::vector<double>& pts, double end, std::size_t n_cells) {
    const double start = pts.back();
    const double step = (end - start) / static_cast<double>(n_cells);
    for (std::size_t j = 1; j < n_cells; ++j) pts.push_back(start + static_cast<double>(j) * step);
    pts.push_back(end);
}

}  // namespace

std::string to_string(LayerSide side) {
    switch (side) {
        case LayerSide::Left: return "left";
        case LayerSide::Right: return "right";
        case LayerSide::Both: return "both";
    }
    return "?";
}

LayerSide parse_layer_side(const std::string& s) {
    if (s == "left") return LayerSide::Left;
    if (s == "right") return LayerSide::Right;
    if (s == "both") return LayerSide::Both;
    throw std::invalid_argument("unknown layer side '" + s + "' (expected left, right or both)");
}

void LayerSpec::validate() const {
    if (!(eps > 0.0) || !(gamma > 0.0) || !(mu > 0.0) || !std::isfinite(eps) || !std::isfinite(gamma) ||
        !std::isfinite(mu)) {
        throw std::invalid_argument("LayerSpec: eps, gamma and mu must be positive and finite");
    }
}

// ---------------------------------------------------------------------------
// Mesh1D

Mesh1D::Mesh1D(std::vector<double> points, std::string label)
    : points_(std::move(points)), label_(std::move(label)) {
    complements_.resize(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) complements_[i] = 1.0 - points_[i];
    finish();
}

Mesh1D::Mesh1D(std::vector<double> points, std::vector<double> complements, std::string label)
    : points_(std::move(points)), complements_(std::move(complements)), label_(std::move(label)) {
    if (complements_.size() != points_.size()) {
        throw std::invalid_argument("Mesh1D: points and complements differ in length");
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (std::abs(points_[i] + complements_[i] - 1.0) > 2.0 * kUlp) {
            throw std::invalid_argument("Mesh1D: complement of node " + std::to_string(i) + " is inconsistent");
        }
    }
    finish();
}

void Mesh1D::finish() {
    if (points_.size() < 2) throw std::invalid_argument("Mesh1D: need at least one cell");
    if (points_.front() != 0.0 || points_.back() != 1.0) {
        throw std::invalid_argument("Mesh1D: endpoints must be exactly 0 and 1 (" + label_ + ")");
    }
    if (complements_.front() != 1.0 || complements_.back() != 0.0) {
        throw std::invalid_argument("Mesh1D: complements must run from 1 to 0");
    }
    spacings_.resize(points_.size() - 1);
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (!std::isfinite(points_[i]) || !(points_[i] > points_[i - 1]) ||
            !(complements_[i] < complements_[i - 1])) {
            throw std::invalid_argument("Mesh1D: nodes not strictly increasing at i=" + std::to_string(i) +
                                        " (" + label_ + ")");
        }
        // Difference in whichever representation is closer to zero.
        spacings_[i - 1] = points_[i] <= 0.5 ? points_[i] - points_[i - 1]
                                              : complements_[i - 1] - complements_[i];
    }
}

Mesh1D Mesh1D::uniform(std::size_t cells) {
    if (cells == 0) throw std::invalid_argument("Mesh1D::uniform: need at least one cell");
    std::vector<double> pts(cells + 1), comp(cells + 1);
    const double n = static_cast<double>(cells);
    for (std::size_t i = 0; i <= cells; ++i) {
        pts[i] = static_cast<double>(i) / n;
        comp[i] = static_cast<double>(cells - i) / n;
    }
    return Mesh1D(std::move(pts), std::move(comp), "uniform(N=" + std::to_string(cells) + ")");
}

Mesh1D Mesh1D::relabeled(std::string label) const {
    Mesh1D m = *this;
    m.label_ = std::move(label);
    return m;
}

bool Mesh1D::is_uniform(double rel_tol) const {
    const double h = 1.0 / static_cast<double>(cells());
    return std::all_of(spacings_.begin(), spacings_.end(),
                       [&](double s) { return std::abs(s - h) <= rel_tol * h; });
}

Mesh1D mirror(const Mesh1D& mesh) {
    std::vector<double> pts(mesh.complements().rbegin(), mesh.complements().rend());
    std::vector<double> comp(mesh.points().rbegin(), mesh.points().rend());
    return Mesh1D(std::move(pts), std::move(comp), "mirror(" + mesh.label() + ")");
}

// ---------------------------------------------------------------------------
// Mesh-characterising functions

double MeshCharFn::psi(double t) const { return std::exp(-lambda(t)); }

double MeshCharFn::max_psi_prime() const {
    if (max_psi_prime_exact) return *max_psi_prime_exact;
    constexpr int samples = 10000;
    const double dt = 0.5 / (samples - 1);
    double best = 0.0;
    double prev = psi(0.0);
    for (int k = 1; k < samples; ++k) {
        const double cur = psi(0.5 * k / (samples - 1));
        best = std::max(best, std::abs(cur - prev) / dt);
        prev = cur;
    }
    return best;
}

void MeshCharFn::validate() const {
    if (!lambda) throw std::invalid_argument("MeshCharFn: lambda is empty");
    if (N < 2) throw std::invalid_argument("MeshCharFn: N must be at least 2");
    const double lnN = std::log(static_cast<double>(N));
    if (std::abs(lambda(0.0)) > 1e-14) throw std::invalid_argument("MeshCharFn: lambda(0) != 0");
    if (std::abs(lambda(0.5) - lnN) > 1e-10 * std::max(1.0, lnN)) {
        throw std::invalid_argument("MeshCharFn: lambda(1/2) != ln N");
    }
    constexpr int samples = 10000;
    double prev = lambda(0.0);
    for (int k = 1; k < samples; ++k) {
        const double cur = lambda(0.5 * k / (samples - 1));
        if (!(cur > prev)) throw std::invalid_argument("MeshCharFn: lambda is not strictly increasing");
        prev = cur;
    }
}

MeshCharFn MeshCharFn::shishkin(std::size_t N) {
    const double lnN = std::log(static_cast<double>(N));
    return MeshCharFn{[lnN](double t) { return 2.0 * t * lnN; }, N, 2.0 * lnN, "shishkin"};
}

MeshCharFn MeshCharFn::bakhvalov_shishkin(std::size_t N) {
    const double c = 2.0 * (1.0 - 1.0 / static_cast<double>(N));
    return MeshCharFn{[c](double t) { return -std::log1p(-c * t); }, N, c, "bakhvalov_shishkin"};
}

// ---------------------------------------------------------------------------
// Piecewise-uniform and Shishkin-type meshes

Mesh1D shishkin(const LayerSpec& spec, std::size_t N) {
    spec.validate();
    require_even_cells(N, "shishkin");
    const double lnN = std::log(static_cast<double>(N));
    if (spec.side == LayerSide::Both) {
        if (N % 4 != 0) throw std::invalid_argument("shishkin: two-sided mesh needs N divisible by 4");
        const double sigma = std::min(0.25, spec.scale() * lnN);
        std::vector<double> half{0.0};
        append_uniform(half, sigma, N / 4);
        append_uniform(half, 0.5, N / 4);
        return symmetric_from_half(half, spec_label("shishkin", spec, "N=" + std::to_string(N) +
                                                                          ",sigma=" + fmt_num(sigma)));
    }
    const double sigma = std::min(0.5, spec.scale() * lnN);
    std::vector<double> pts{0.0};
    append_uniform(pts, sigma, N / 2);
    append_uniform(pts, 1.0, N / 2);
    return place(std::move(pts), spec.side,
                 spec_label("shishkin", spec, "N=" + std::to_string(N) + ",sigma=" + fmt_num(sigma)));
}

Mesh1D shishkin_type(const LayerSpec& spec, std::size_t N, const MeshCharFn& charfn) {
    spec.validate();
    require_even_cells(N, "shishkin_type");
    if (charfn.N != N) throw std::invalid_argument("shishkin_type: charfn built for a different N");
    charfn.validate();
    const std::string label = spec_label(charfn.name, spec, "N=" + std::to_string(N));
    const double a = spec.scale();
    const double end = a * charfn.lambda(0.5);
    if (end >= 0.5) {
        return place(uniform_points(N), spec.side, label + "[uniform]");
    }
    std::vector<double> pts(1, 0.0);
    for (std::size_t i = 1; i <= N / 2; ++i) {
        const double x = a * charfn.lambda(static_cast<double>(i) / static_cast<double>(N));
        if (!(x > pts.back())) {
            throw std::invalid_argument("shishkin_type: mesh-generating function not increasing at i=" +
                                        std::to_string(i));
        }
        pts.push_back(x);
    }
    append_uniform(pts, 1.0, N / 2);
    return place(std::move(pts), spec.side, label);
}

Mesh1D bakhvalov_type(const LayerSpec& spec, std::size_t N) {
    spec.validate();
    require_even_cells(N, "bakhvalov_type");
    const double a = spec.scale();
    const std::string label = spec_label("bakhvalov_type", spec, "N=" + std::to_string(N));
    if (spec.eps >= 1.0 || a * std::log(1.0 / spec.eps) >= 0.5) {
        return place(uniform_points(N), spec.side, label + "[uniform]");
    }
    const double c = 2.0 * (1.0 - spec.eps) / static_cast<double>(N);
    std::vector<double> pts(1, 0.0);
    for (std::size_t i = 1; i <= N / 2; ++i) {
        pts.push_back(-a * std::log1p(-c * static_cast<double>(i)));
    }
    append_uniform(pts, 1.0, N / 2);
    return place(std::move(pts), spec.side, label);
}

// ---------------------------------------------------------------------------
// Original Bakhvalov mesh

namespace {

// Tangency condition in the variable s = q - tau, which keeps full relative
// precision for the tiny distances that occur when eps is small:
//   r(s) = a (1 - q + s)/s - 1 - a ln(s/q), strictly decreasing in s.
struct BakhvalovResidual {
    double a;
    double q;
    double operator()(double s) const { return a * (1.0 - q + s) / s - 1.0 - a * std::log(s / q); }
    double derivative(double s) const { return -a * (1.0 - q) / (s * s) - a / s; }
};

}  // namespace

std::optional<double> bakhvalov_tau(const LayerSpec& spec, double q) {
    spec.validate();
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("bakhvalov: q must lie in (0, 1)");
    const double a = spec.scale();
    if (a >= q) return std::nullopt;
    const BakhvalovResidual r{a, q};
    double s_lo = std::min(q, a) * 1e-6;
    for (int k = 0; k < 20 && r(s_lo) <= 0.0; ++k) s_lo *= 1e-3;
    RootOptions opt;
    opt.x_tol = 1e-12 * std::min(1.0, a);
    const RootResult root = safeguarded_newton([&](double s) { return r(s); },
                                               [&](double s) { return r.derivative(s); }, s_lo, q, opt);
    return q - root.x;
}

Mesh1D bakhvalov_original(const LayerSpec& spec, std::size_t N, double q) {
    spec.validate();
    if (N < 2) throw std::invalid_argument("bakhvalov_original: N must be at least 2");
    const std::string label = spec_label("bakhvalov", spec, "N=" + std::to_string(N) + ",q=" + fmt_num(q));
    const auto tau = bakhvalov_tau(spec, q);
    if (!tau) {
        return place(uniform_points(N), spec.side, label + "[degenerate: uniform]");
    }
    const double a = spec.scale();
    const double s = q - *tau;
    const double slope = a / s;
    std::vector<double> pts(N + 1), comp(N + 1);
    for (std::size_t i = 0; i <= N; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(N);
        if (t <= *tau) {
            pts[i] = -a * std::log((q - t) / q);
            comp[i] = 1.0 - pts[i];
        } else {
            // Tangent line through (1, 1).
            comp[i] = slope * (1.0 - t);
            pts[i] = 1.0 - comp[i];
        }
    }
    pts[N] = 1.0;
    comp[N] = 0.0;
    Mesh1D left(std::move(pts), std::move(comp), label + "[tau=" + fmt_num(*tau) + "]");
    if (spec.side == LayerSide::Left) return left;
    if (spec.side == LayerSide::Right) return mirror(left).relabeled(left.label());
    throw std::invalid_argument("bakhvalov_original: two-sided layers are not supported");
}

// ---------------------------------------------------------------------------
// Lambert-type implicit mesh

double lambert_residual(const LayerSpec& spec, double t, double xi, LambertForm form) {
    const double a = spec.scale();
    const double e = form == LambertForm::SignCorrected ? std::exp(-xi / a) : std::exp(xi / a);
    return xi - e + 1.0 - 2.0 * t;
}

double lambert_xi(const LayerSpec& spec, double t, LambertForm form) {
    spec.validate();
    if (t == 0.0) return 0.0;
    const double a = spec.scale();
    const auto f = [&](double xi) { return lambert_residual(spec, t, xi, form); };
    std::function<double(double)> df;
    double hi = 2.0 * t;
    if (form == LambertForm::SignCorrected) {
        df = [a](double xi) { return 1.0 + std::exp(-xi / a) / a; };
    } else {
        df = [a](double xi) { return 1.0 - std::exp(xi / a) / a; };
        if (a > 1.0) hi = std::max(hi, a * std::log(a));
    }
    try {
        return safeguarded_newton(f, df, 0.0, hi, RootOptions{1e-15, 200}).x;
    } catch (const BracketError&) {
        throw BracketError("lambert_mesh: no root bracketed at t=" + fmt_num(t));
    }
}

Mesh1D lambert_mesh(const LayerSpec& spec, std::size_t N, LambertForm form) {
    spec.validate();
    if (N < 4) throw std::invalid_argument("lambert_mesh: N must be at least 4");
    std::vector<double> xi(N + 1);
    for (std::size_t i = 0; i <= N; ++i) {
        xi[i] = lambert_xi(spec, static_cast<double>(i) / static_cast<double>(N), form);
    }
    const double end = xi[N];
    for (double& v : xi) v /= end;
    xi[N] = 1.0;
    return place(std::move(xi), spec.side,
                 spec_label(form == LambertForm::SignCorrected ? "lambert" : "lambert_literal", spec,
                            "N=" + std::to_string(N)));
}

// ---------------------------------------------------------------------------
// System (multi-parameter) Shishkin mesh

std::vector<double> system_transition_points(std::span<const double> eps, double sigma, double beta,
                                             std::size_t N, double extent) {
    if (eps.empty()) throw std::invalid_argument("system_shishkin: empty eps list");
    for (std::size_t k = 0; k < eps.size(); ++k) {
        if (!(eps[k] > 0.0)) throw std::invalid_argument("system_shishkin: eps must be positive");
        if (k > 0 && eps[k] < eps[k - 1]) throw std::invalid_argument("system_shishkin: eps must be ascending");
    }
    if (!(sigma > 0.0) || !(beta > 0.0)) throw std::invalid_argument("system_shishkin: sigma, beta must be > 0");
    const std::size_t M = eps.size();
    const double lnN = std::log(static_cast<double>(N));
    std::vector<double> tau(M + 2);
    tau[M + 1] = extent;
    for (std::size_t k = M; k >= 1; --k) {
        const double kk = static_cast<double>(k);
        tau[k] = std::min(kk * tau[k + 1] / (kk + 1.0), sigma * eps[k - 1] / beta * lnN);
    }
    tau[0] = 0.0;
    return tau;
}

Mesh1D system_shishkin(std::span<const double> eps, double sigma, double beta, std::size_t N,
                       LayerSide side) {
    const std::size_t M = eps.size();
    const std::size_t bands = side == LayerSide::Both ? 2 * (M + 1) : M + 1;
    if (N == 0 || N % bands != 0) {
        throw std::invalid_argument("system_shishkin: N=" + std::to_string(N) + " not divisible by " +
                                    std::to_string(bands));
    }
    const double extent = side == LayerSide::Both ? 0.5 : 1.0;
    const auto tau = system_transition_points(eps, sigma, beta, N, extent);
    std::vector<double> pts{0.0};
    for (std::size_t k = 0; k <= M; ++k) append_uniform(pts, tau[k + 1], N / bands);

    std::string label = "system_shishkin(M=" + std::to_string(M) + ",sigma=" + fmt_num(sigma) +
                        ",beta=" + fmt_num(beta) + ",N=" + std::to_string(N) + ",eps=";
    for (std::size_t k = 0; k < M; ++k) label += (k ? ";" : "") + fmt_num(eps[k]);
    label += ",side=" + to_string(side) + ")";
    if (side == LayerSide::Both) return symmetric_from_half(pts, label);
    return place(std::move(pts), side, label);
}

// ---------------------------------------------------------------------------
// Diagnostics

namespace {

void ratio_and_extrema(const Mesh1D& mesh, MeshDiagnostics& d) {
    const auto h = mesh.spacings();
    d.min_h = *std::min_element(h.begin(), h.end());
    d.max_h = *std::max_element(h.begin(), h.end());
    d.local_ratio = 1.0;
    for (std::size_t i = 0; i + 1 < h.size(); ++i) {
        d.local_ratio = std::max({d.local_ratio, h[i] / h[i + 1], h[i + 1] / h[i]});
    }
}

void reduce_quality(const std::vector<QuadratureResult>& cells, MeshDiagnostics& d) {
    double q = 0.0;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        q = std::max(q, cells[k].value);
        if (!cells[k].converged) d.unconverged_cells.push_back(k + 1);
    }
    d.quality = q;
}

}  // namespace

MeshDiagnostics diagnostics_serial(const Mesh1D& mesh, const std::function<double(double)>& g) {
    MeshDiagnostics d;
    ratio_and_extrema(mesh, d);
    if (g) {
        std::vector<QuadratureResult> cells(mesh.cells());
        for (std::size_t k = 1; k <= mesh.cells(); ++k) {
            cells[k - 1] = integrate_adaptive(g, mesh.x(k - 1), mesh.x(k), 1e-10);
        }
        reduce_quality(cells, d);
    }
    return d;
}

MeshDiagnostics diagnostics(const Mesh1D& mesh, const std::function<double(double)>& g) {
    MeshDiagnostics d;
    ratio_and_extrema(mesh, d);
    if (g) {
        std::vector<QuadratureResult> cells(mesh.cells());
        const auto n = static_cast<std::ptrdiff_t>(mesh.cells());
#pragma omp parallel for schedule(dynamic, 16)
        for (std::ptrdiff_t k = 1; k <= n; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            cells[kk - 1] = integrate_adaptive(g, mesh.x(kk - 1), mesh.x(kk), 1e-10);
        }
        reduce_quality(cells, d);
    }
    return d;
}

}  // namespace spbvp
