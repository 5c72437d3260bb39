#pragma once

// Layer-adapted meshes on [0, 1].
//
// Every family is generated for a layer at x = 0 and reflected when the
// layer sits at x = 1. Meshes store each node both as x_i and as its
// complement 1 - x_i, so nodes close to x = 1 keep full relative precision
// and reflection is an exact involution.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spbvp {

enum class LayerSide { Left, Right, Both };

std::string to_string(LayerSide side);
LayerSide parse_layer_side(const std::string& s);

/// Layer term exp(-gamma x / eps); mu is the order parameter of the method.
struct LayerSpec {
    double eps = 1.0;
    double gamma = 1.0;
    double mu = 1.0;
    LayerSide side = LayerSide::Left;

    /// Throws std::invalid_argument unless eps, gamma, mu > 0.
    void validate() const;
    /// mu * eps / gamma, the length scale of the layer.
    double scale() const { return mu * eps / gamma; }
};

class Mesh1D {
public:
    /// Validates x_0 = 0, x_N = 1 and strict monotonicity.
    explicit Mesh1D(std::vector<double> points, std::string label = {});
    /// As above, with explicitly supplied complements c_i = 1 - x_i.
    Mesh1D(std::vector<double> points, std::vector<double> complements, std::string label);

    static Mesh1D uniform(std::size_t cells);

    /// Number of cells N.
    std::size_t cells() const noexcept { return points_.size() - 1; }
    /// Number of nodes N + 1.
    std::size_t nodes() const noexcept { return points_.size(); }

    std::span<const double> points() const noexcept { return points_; }
    std::span<const double> complements() const noexcept { return complements_; }
    double x(std::size_t i) const { return points_[i]; }
    /// h_i = x_i - x_{i-1} for 1 <= i <= N.
    double h(std::size_t i) const { return spacings_[i - 1]; }
    /// h_1 .. h_N.
    std::span<const double> spacings() const noexcept { return spacings_; }

    const std::string& label() const noexcept { return label_; }
    Mesh1D relabeled(std::string label) const;

    /// True when all spacings agree with 1/N to a relative tolerance.
    bool is_uniform(double rel_tol = 1e-10) const;

    friend bool operator==(const Mesh1D& a, const Mesh1D& b) {
        return a.points_ == b.points_ && a.complements_ == b.complements_;
    }

private:
    void finish();

    std::vector<double> points_;
    std::vector<double> complements_;
    std::vector<double> spacings_;
    std::string label_;
};

/// Reflection x -> 1 - x. mirror(mirror(m)) == m bitwise.
Mesh1D mirror(const Mesh1D& mesh);

/// Mesh-generating function lambda on [0, 1/2] and psi = exp(-lambda).
struct MeshCharFn {
    std::function<double(double)> lambda;
    std::size_t N = 0;
    std::optional<double> max_psi_prime_exact;
    std::string name = "custom";

    double psi(double t) const;
    /// Analytic value when known, otherwise the largest difference quotient
    /// over 10^4 uniform samples of [0, 1/2].
    double max_psi_prime() const;
    /// lambda(0) = 0, lambda(1/2) = ln N to 1e-10, increasing on samples.
    void validate() const;

    static MeshCharFn shishkin(std::size_t N);
    static MeshCharFn bakhvalov_shishkin(std::size_t N);
};

/// Shishkin mesh, sigma = min(1/2, mu eps/gamma ln N), N/2 cells on each side.
/// Side::Both uses sigma = min(1/4, ...) with N/4 : N/2 : N/4 cells.
Mesh1D shishkin(const LayerSpec& spec, std::size_t N);

/// Fine points x_i = (mu eps/gamma) lambda(i/N), i <= N/2, uniform beyond.
/// Falls back to a uniform mesh when the fine part would reach past 1/2.
Mesh1D shishkin_type(const LayerSpec& spec, std::size_t N, const MeshCharFn& charfn);

/// Fine points x_i = -(mu eps/gamma) ln(1 - 2(1 - eps) i/N), i <= N/2,
/// equidistant on [sigma*, 1], sigma* = min(1/2, mu eps/gamma ln(1/eps)).
Mesh1D bakhvalov_type(const LayerSpec& spec, std::size_t N);

/// Tangent point of the original Bakhvalov mesh: the t where the tangent to
/// phi(t) = -(mu eps/gamma) ln(1 - t/q) passes through (1, 1). Empty when
/// mu eps/gamma >= q (no fine region; the mesh degenerates to uniform).
std::optional<double> bakhvalov_tau(const LayerSpec& spec, double q);

/// Original Bakhvalov mesh, q in (0, 1). Degenerates to a uniform mesh,
/// flagged in the label, when no tangent point exists.
Mesh1D bakhvalov_original(const LayerSpec& spec, std::size_t N, double q);

enum class GartlandVariant { Gartland, GartlandType };

/// Recursively graded mesh x_1 = eps H, h_i = min(H, eps H e^{gamma x_i/(2 eps)}, e h_{i-1});
/// the GartlandType variant drops the e h_{i-1} cap.
Mesh1D gartland(const LayerSpec& spec, double H, GartlandVariant variant = GartlandVariant::Gartland);

enum class DuranLombardiVariant { Geometric, InitialUniform };

/// x_1 = kappa H eps, x_{i+1} = x_i (1 + kappa H) until 1 is reached. The
/// InitialUniform variant first places x_i = i kappa H eps up to i = 1/(kappa H) + 1.
Mesh1D duran_lombardi(const LayerSpec& spec, double H, double kappa,
                      DuranLombardiVariant variant = DuranLombardiVariant::Geometric);

enum class LambertForm { SignCorrected, Literal };

/// Root xi(t) of xi - exp(-+gamma xi/(mu eps)) + 1 - 2t = 0. Throws
/// BracketError naming t when no root is bracketed.
double lambert_xi(const LayerSpec& spec, double t, LambertForm form = LambertForm::SignCorrected);
double lambert_residual(const LayerSpec& spec, double t, double xi,
                        LambertForm form = LambertForm::SignCorrected);

/// Nodes xi(i/N) rescaled so x_N = 1.
Mesh1D lambert_mesh(const LayerSpec& spec, std::size_t N,
                    LambertForm form = LambertForm::SignCorrected);

using Monitor = std::function<double(double)>;

/// M(s) = max(1, K gamma/eps exp(-gamma s/(mu eps))).
Monitor bakhvalov_monitor(const LayerSpec& spec, double K = 2.0);

struct EquidistributionResult {
    Mesh1D mesh;
    int iterations = 0;
    /// max_i |int_cell M - mean| / mean, cell integrals by adaptive quadrature.
    double residual = 0.0;
    bool converged = false;
};

/// De Boor style iteration: trapezoid cumulative integral on a background
/// grid refined from the current mesh, piecewise-linear inverse, repeat.
EquidistributionResult equidistribute(const Monitor& monitor, std::size_t N, int max_iter = 40,
                                      double tol = 1e-8);

/// Equidistributes bakhvalov_monitor(spec, K). A right layer is built as a
/// left one and mirrored, which keeps full resolution next to x = 1.
EquidistributionResult equidistribute_layer(const LayerSpec& spec, std::size_t N, double K = 2.0,
                                            int max_iter = 40, double tol = 1e-8);

/// Transition points tau_0 = 0 < ... < tau_{M+1} = extent of the layered
/// system mesh, tau_k = min(k tau_{k+1}/(k+1), sigma eps_k/beta ln N).
std::vector<double> system_transition_points(std::span<const double> eps, double sigma, double beta,
                                             std::size_t N, double extent = 1.0);

/// Piecewise-uniform mesh with N/(M+1) cells between consecutive transition
/// points. Right reflects the mesh; Both places the construction on [0, 1/2]
/// (N/(2(M+1)) cells per band) and reflects it onto [1/2, 1].
Mesh1D system_shishkin(std::span<const double> eps, double sigma, double beta, std::size_t N,
                       LayerSide side = LayerSide::Left);

struct MeshDiagnostics {
    double min_h = 0.0;
    double max_h = 0.0;
    /// max over neighbouring cells of h_i / h_{i+-1}.
    double local_ratio = 1.0;
    /// max_k int_{x_{k-1}}^{x_k} g, when an envelope was supplied.
    std::optional<double> quality;
    /// 1-based cell indices where the quadrature did not converge.
    std::vector<std::size_t> unconverged_cells;
};

/// OpenMP-parallel over cells.
MeshDiagnostics diagnostics(const Mesh1D& mesh, const std::function<double(double)>& g = {});
/// Serial reference for diagnostics().
MeshDiagnostics diagnostics_serial(const Mesh1D& mesh, const std::function<double(double)>& g = {});

}  // namespace spbvp
