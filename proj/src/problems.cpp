#include "spbvp/problems.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spbvp {

std::string to_string(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::WeaklyCoupled: return "weakly_coupled";
        case ProblemKind::StronglyCoupled: return "strongly_coupled";
        case ProblemKind::ReactionDiffusion: return "reaction_diffusion";
    }
    return "?";
}

ProblemKind parse_problem_kind(const std::string& s) {
    if (s == "weakly_coupled") return ProblemKind::WeaklyCoupled;
    if (s == "strongly_coupled") return ProblemKind::StronglyCoupled;
    if (s == "reaction_diffusion") return ProblemKind::ReactionDiffusion;
    throw std::invalid_argument("unknown problem kind '" + s + "'");
}

std::string to_string(ReferenceKind kind) {
    switch (kind) {
        case ReferenceKind::Exact: return "exact";
        case ReferenceKind::Asymptotic: return "asymptotic";
        case ReferenceKind::FineMeshOracle: return "fine_mesh_oracle";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Coefficient fields

MatrixField MatrixField::constant(DenseMatrix value) {
    if (!value.square() || value.rows() == 0) throw std::invalid_argument("MatrixField: need a square matrix");
    MatrixField f;
    f.m_ = value.rows();
    f.constant_ = value;
    f.eval_ = [value](double) { return value; };
    const std::size_t m = f.m_;
    f.deriv_ = [m](double) { return DenseMatrix(m, m); };
    return f;
}

MatrixField MatrixField::function(std::size_t m, std::function<DenseMatrix(double)> eval,
                                  std::function<DenseMatrix(double)> deriv) {
    if (m == 0 || !eval) throw std::invalid_argument("MatrixField: empty evaluator");
    MatrixField f;
    f.m_ = m;
    f.eval_ = std::move(eval);
    f.deriv_ = std::move(deriv);
    return f;
}

DenseMatrix MatrixField::operator()(double x) const {
    if (!eval_) throw std::logic_error("MatrixField: not initialised");
    return eval_(x);
}

DenseMatrix MatrixField::derivative(double x) const {
    if (deriv_) return deriv_(x);
    const double h = 1e-6;
    const double lo = std::max(0.0, x - h);
    const double hi = std::min(1.0, x + h);
    return (1.0 / (hi - lo)) * (eval_(hi) - eval_(lo));
}

MatrixField MatrixField::scaled_rows(const std::vector<double>& s) const {
    if (s.size() != m_) throw std::invalid_argument("MatrixField: scale vector size mismatch");
    auto scale = [s](DenseMatrix a) {
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) *= s[i];
        return a;
    };
    if (constant_) return constant(scale(*constant_));
    auto ev = eval_;
    std::function<DenseMatrix(double)> dv;
    if (deriv_) dv = [d = deriv_, scale](double x) { return scale(d(x)); };
    return function(m_, [ev, scale](double x) { return scale(ev(x)); }, dv);
}

VectorField VectorField::constant(std::vector<double> value) {
    if (value.empty()) throw std::invalid_argument("VectorField: empty vector");
    VectorField f;
    f.m_ = value.size();
    f.constant_ = value;
    f.eval_ = [value](double) { return value; };
    return f;
}

VectorField VectorField::function(std::size_t m, std::function<std::vector<double>(double)> eval) {
    if (m == 0 || !eval) throw std::invalid_argument("VectorField: empty evaluator");
    VectorField f;
    f.m_ = m;
    f.eval_ = std::move(eval);
    return f;
}

std::vector<double> VectorField::operator()(double x) const {
    if (!eval_) throw std::logic_error("VectorField: not initialised");
    return eval_(x);
}

VectorField VectorField::scaled_rows(const std::vector<double>& s) const {
    if (s.size() != m_) throw std::invalid_argument("VectorField: scale vector size mismatch");
    if (constant_) {
        auto v = *constant_;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= s[i];
        return constant(v);
    }
    return function(m_, [ev = eval_, s](double x) {
        auto v = ev(x);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= s[i];
        return v;
    });
}

// ---------------------------------------------------------------------------
// SystemProblem

DenseMatrix SystemProblem::convection(double x) const {
    if (B) return (*B)(x);
    return DenseMatrix(M(), M());
}

DenseMatrix SystemProblem::convection_derivative(double x) const {
    if (B) return B->derivative(x);
    return DenseMatrix(M(), M());
}

void SystemProblem::validate() const {
    const std::size_t m = M();
    if (m == 0) throw std::invalid_argument(name + ": need at least one component");
    if (eps.size() != m) throw std::invalid_argument(name + ": eps list size differs from M");
    for (double d : diffusion)
        if (!(d > 0.0)) throw std::invalid_argument(name + ": diffusion coefficients must be positive");
    for (double e : eps)
        if (!(e > 0.0)) throw std::invalid_argument(name + ": eps must be positive");
    if (A.size() != m || f.size() != m) throw std::invalid_argument(name + ": A or f has the wrong size");
    if (g0.size() != m || g1.size() != m) throw std::invalid_argument(name + ": boundary data has the wrong size");
    if (kind == ProblemKind::ReactionDiffusion) {
        if (B) throw std::invalid_argument(name + ": reaction-diffusion problems carry no convection matrix");
        return;
    }
    if (!B || B->size() != m) throw std::invalid_argument(name + ": convection matrix missing or of wrong size");
    if (kind == ProblemKind::WeaklyCoupled) {
        for (std::size_t s = 0; s <= 100; ++s) {
            const DenseMatrix b = (*B)(static_cast<double>(s) / 100.0);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    if (i != j && b(i, j) != 0.0) {
                        throw std::invalid_argument(name + ": weakly coupled problems need a diagonal B");
                    }
        }
    }
}

SystemProblem SystemProblem::scaled_rows(const std::vector<double>& s) const {
    if (s.size() != M()) throw std::invalid_argument("scaled_rows: scale vector size mismatch");
    for (double v : s)
        if (!(v > 0.0)) throw std::invalid_argument("scaled_rows: scale factors must be positive");
    SystemProblem p = *this;
    for (std::size_t k = 0; k < s.size(); ++k) p.diffusion[k] *= s[k];
    if (B) p.B = B->scaled_rows(s);
    p.A = A.scaled_rows(s);
    p.f = f.scaled_rows(s);
    return p;
}

// ---------------------------------------------------------------------------
// Reference solutions

ReferenceSolution ReferenceSolution::from_nodal(const Mesh1D& mesh, std::vector<double> values, std::size_t M,
                                                std::string note) {
    if (values.size() != mesh.nodes() * M) throw std::invalid_argument("from_nodal: value count mismatch");
    ReferenceSolution r;
    r.kind = ReferenceKind::FineMeshOracle;
    r.M = M;
    r.note = std::move(note);
    r.n_ref = mesh.cells();
    r.oracle_mesh = mesh.label();
    std::vector<double> x(mesh.points().begin(), mesh.points().end());
    r.value = [x = std::move(x), v = std::move(values), M](double t) {
        if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("reference evaluated outside [0,1]");
        auto it = std::upper_bound(x.begin(), x.end(), t);
        std::size_t i = it == x.end() ? x.size() - 1 : static_cast<std::size_t>(it - x.begin());
        if (i == 0) i = 1;
        const double w = (t - x[i - 1]) / (x[i] - x[i - 1]);
        std::vector<double> out(M);
        for (std::size_t k = 0; k < M; ++k) out[k] = (1.0 - w) * v[(i - 1) * M + k] + w * v[i * M + k];
        return out;
    };
    return r;
}

// ---------------------------------------------------------------------------
// Envelopes

double LayerEnvelope::operator()(double x, int k) const {
    if (k < 0 || k > 2) throw std::invalid_argument("LayerEnvelope: derivative order must be 0, 1 or 2");
    double v = 1.0;
    for (const Term& t : terms) {
        const double amp = std::pow(t.scale, -k);
        const double dl = x;
        const double dr = 1.0 - x;
        if (t.side != LayerSide::Right) v += amp * std::exp(-t.rate * dl / t.scale);
        if (t.side != LayerSide::Left) v += amp * std::exp(-t.rate * dr / t.scale);
    }
    return v;
}

LayerEnvelope LayerEnvelope::convection(double eps, double beta, LayerSide side) {
    if (!(eps > 0.0) || !(beta > 0.0)) throw std::invalid_argument("LayerEnvelope: eps and beta must be positive");
    return LayerEnvelope{{{eps, beta, side}}};
}

LayerEnvelope LayerEnvelope::reaction_diffusion(const std::vector<double>& eps, double kappa) {
    if (!(kappa > 0.0)) throw std::invalid_argument("LayerEnvelope: kappa must be positive");
    LayerEnvelope env;
    for (double e : eps) {
        if (!(e > 0.0)) throw std::invalid_argument("LayerEnvelope: eps must be positive");
        env.terms.push_back({e, kappa, LayerSide::Both});
    }
    return env;
}

// ---------------------------------------------------------------------------
// Envelope fitting

namespace {

std::vector<double> envelope_samples(const LayerEnvelope& env) {
    std::vector<double> xs;
    for (std::size_t j = 0; j <= 1000; ++j) xs.push_back(static_cast<double>(j) / 1000.0);
    for (const auto& t : env.terms) {
        for (double d = 1e-3 * t.scale; d < 0.5; d *= 1.12) {
            if (t.side != LayerSide::Right) xs.push_back(d);
            if (t.side != LayerSide::Left) xs.push_back(1.0 - d);
        }
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

double layer_distance(const LayerEnvelope::Term& t, double x) {
    double d = 1.0;
    if (t.side != LayerSide::Right) d = std::min(d, x);
    if (t.side != LayerSide::Left) d = std::min(d, 1.0 - x);
    return d;
}

// Step from a doubling sequence starting at 1/50 of the finest layer scale,
// minimising estimated truncation error on the layer terms plus rounding
// error for a function of size u_mag.
double fd_step(const LayerEnvelope& env, double x, int k, double u_mag) {
    double step = 1e-4;
    for (const auto& t : env.terms) step = std::min(step, t.scale / 50.0);
    auto total = [&](double h) {
        double e = 4e-16 * u_mag / std::pow(h, k);
        for (const auto& t : env.terms) {
            const double d = std::max(0.0, layer_distance(t, x) - h);
            const double r = t.rate * h / t.scale;
            e += std::pow(t.scale, -k) * std::exp(-t.rate * d / t.scale) * r * r;
        }
        return e;
    };
    while (2.0 * step <= 1e-4 && total(2.0 * step) <= std::max(total(step), 1e-4 * env(x, k))) step *= 2.0;
    return step;
}

}  // namespace

double envelope_check(const ReferenceSolution& ref, std::size_t component, const LayerEnvelope& env, int order) {
    if (component >= ref.M) throw std::out_of_range("envelope_check: component out of range");
    if (order < 0 || order > 2) throw std::invalid_argument("envelope_check: order must be 0, 1 or 2");
    double c = 0.0;
    for (double x : envelope_samples(env)) {
        const double h = fd_step(env, x, order, 1.0 + std::abs(ref(x)[component]));
        double mag;
        if (order == 0) {
            mag = std::abs(ref(x)[component]);
        } else {
            if (x - h < 0.0 || x + h > 1.0) continue;
            const double um = ref(x - h)[component];
            const double up = ref(x + h)[component];
            if (order == 1) {
                mag = std::abs((up - um) / (2.0 * h));
            } else {
                const double u0 = ref(x)[component];
                mag = std::abs((up - 2.0 * u0 + um) / (h * h));
            }
        }
        const double e = env(x, order);
        if (!(e > 0.0)) throw std::domain_error("envelope_check: envelope vanished");
        c = std::max(c, mag / e);
    }
    return c;
}

}  // namespace spbvp
