#include "spbvp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <omp.h>

#include "json.hpp"
#include "spbvp/numerics.hpp"

namespace spbvp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

bool first_order(Scheme s) { return s == Scheme::SimpleUpwind || s == Scheme::MidpointUpwind || s == Scheme::Ias; }

std::size_t round_up(std::size_t n, std::size_t m) { return (n + m - 1) / m * m; }

}  // namespace

double max_norm_error(const DiscreteSolution& sol, const ReferenceSolution& ref) {
    if (ref.M != sol.M) throw std::invalid_argument("max_norm_error: component count mismatch");
    double err = 0.0;
    for (std::size_t i = 0; i < sol.mesh.nodes(); ++i) {
        const std::vector<double> u = ref(sol.mesh.x(i));
        for (std::size_t k = 0; k < sol.M; ++k) err = std::max(err, std::abs(u[k] - sol.value(i, k)));
    }
    return err;
}

double energy_norm_error(const DiscreteSolution& sol, const ReferenceSolution& ref,
                         const std::vector<double>& diffusion) {
    if (!ref.derivative) throw std::invalid_argument("energy_norm_error: reference has no derivative");
    if (ref.M != sol.M || diffusion.size() != sol.M)
        throw std::invalid_argument("energy_norm_error: component count mismatch");
    const Mesh1D& m = sol.mesh;
    double total = 0.0;
    for (std::size_t c = 1; c <= m.cells(); ++c) {
        const double a = m.x(c - 1), b = m.x(c), h = m.h(c);
        for (std::size_t k = 0; k < sol.M; ++k) {
            const double ua = sol.value(c - 1, k), ub = sol.value(c, k);
            const double slope = (ub - ua) / h;
            auto integrand = [&](double x) {
                const double w = (x - a) / h;
                const double e = ref(x)[k] - ((1.0 - w) * ua + w * ub);
                const double de = ref.derivative(x)[k] - slope;
                return diffusion[k] * de * de + e * e;
            };
            total += integrate_adaptive(integrand, a, b, 1e-8, 1e-22).value;
        }
    }
    return std::sqrt(total);
}

// ---------------------------------------------------------------------------
// Mesh factory

std::vector<std::string> mesh_family_names() {
    return {"uniform",        "shishkin", "bakhvalov_shishkin", "bakhvalov_type", "bakhvalov",
            "gartland",       "gartland_type", "duran_lombardi", "lambert",        "equidistributed",
            "system_shishkin"};
}

Mesh1D make_mesh(const std::string& family, const SystemProblem& problem, std::size_t N) {
    const MeshHints& h = problem.hints;
    const LayerSpec& layer = h.layer;
    if (N == 0) throw std::invalid_argument("make_mesh: N must be positive");
    const double H = 1.0 / static_cast<double>(N);
    if (family == "uniform") return Mesh1D::uniform(N);
    if (family == "shishkin") return shishkin(layer, N);
    if (family == "bakhvalov_shishkin") return shishkin_type(layer, N, MeshCharFn::bakhvalov_shishkin(N));
    if (family == "bakhvalov_type") return bakhvalov_type(layer, N);
    if (family == "bakhvalov") return bakhvalov_original(layer, N, 0.5);
    if (family == "gartland") return gartland(layer, H, GartlandVariant::Gartland);
    if (family == "gartland_type") return gartland(layer, H, GartlandVariant::GartlandType);
    if (family == "duran_lombardi") return duran_lombardi(layer, H, 1.0);
    if (family == "lambert") return lambert_mesh(layer, N);
    if (family == "equidistributed") return equidistribute_layer(layer, N).mesh;
    if (family == "system_shishkin") {
        const std::vector<double>& eps = h.eps_list.empty() ? problem.eps : h.eps_list;
        return system_shishkin(eps, h.system_sigma, h.system_beta, N, layer.side);
    }
    throw std::invalid_argument("unknown mesh family '" + family + "'");
}

// ---------------------------------------------------------------------------
// Rates

double RateTarget::operator()(std::size_t N) const {
    const double n = static_cast<double>(N);
    const double base = log_factor ? std::log(n) / n : 1.0 / n;
    return std::pow(base, order);
}

RateTarget default_target(const std::string& family, Scheme scheme, ProblemKind kind) {
    RateTarget t;
    t.order = (scheme == Scheme::Central && kind == ProblemKind::ReactionDiffusion) ? 2 : 1;
    t.log_factor = family == "shishkin" || family == "system_shishkin";
    return t;
}

std::optional<double> raw_rate(std::size_t n0, double e0, std::size_t n1, double e1) {
    if (!positive(e0) || !positive(e1) || n0 == n1) return std::nullopt;
    return std::log(e0 / e1) / std::log(static_cast<double>(n1) / static_cast<double>(n0));
}

std::optional<double> corrected_rate(std::size_t n0, double e0, std::size_t n1, double e1) {
    if (!positive(e0) || !positive(e1) || n0 < 2 || n1 < 2 || n0 == n1) return std::nullopt;
    const RateTarget t{1, true};
    return std::log(e0 / e1) / std::log(t(n0) / t(n1));
}

// ---------------------------------------------------------------------------
// Report summaries

double ConvergenceReport::c_star_spread(double eps_max) const {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t e = 0; e < config.eps_list.size(); ++e) {
        if (config.eps_list[e] > eps_max * (1.0 + 1e-12)) continue;
        const double c = c_star_per_eps[e];
        if (!positive(c)) return kNaN;
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    return hi > 0.0 ? hi / lo : kNaN;
}

std::optional<double> ConvergenceReport::finest_rate_raw() const {
    return rate_raw.size() >= 2 ? rate_raw[rate_raw.size() - 2] : std::nullopt;
}

std::optional<double> ConvergenceReport::finest_rate_corrected() const {
    return rate_corrected.size() >= 2 ? rate_corrected[rate_corrected.size() - 2] : std::nullopt;
}

void summarize(ConvergenceReport& r) {
    const auto& Ns = r.config.N_list;
    const std::size_t nN = Ns.size(), nE = r.config.eps_list.size();
    r.failures = 0;
    r.uniform_error.assign(nN, 0.0);
    r.uniform_energy_error.assign(nN, r.config.energy ? 0.0 : kNaN);
    r.c_star_per_eps.assign(nE, 0.0);
    r.c_star_energy_per_eps.assign(nE, r.config.energy ? 0.0 : kNaN);
    for (std::size_t e = 0; e < nE; ++e) {
        for (std::size_t n = 0; n < nN; ++n) {
            ErrorRecord& rec = r.records[e * nN + n];
            rec.rate_raw.reset();
            rec.rate_corrected.reset();
            if (!rec.ok()) {
                ++r.failures;
                r.uniform_error[n] = kNaN;
                r.uniform_energy_error[n] = kNaN;
                r.c_star_per_eps[e] = kNaN;
                r.c_star_energy_per_eps[e] = kNaN;
                continue;
            }
            if (!std::isnan(r.uniform_error[n])) r.uniform_error[n] = std::max(r.uniform_error[n], rec.max_norm_error);
            if (!std::isnan(r.c_star_per_eps[e]))
                r.c_star_per_eps[e] = std::max(r.c_star_per_eps[e], rec.max_norm_error / r.target(Ns[n]));
            if (r.config.energy) {
                const double ee = rec.energy_norm_error.value_or(kNaN);
                if (!std::isnan(r.uniform_energy_error[n]))
                    r.uniform_energy_error[n] = std::isnan(ee) ? kNaN : std::max(r.uniform_energy_error[n], ee);
                if (!std::isnan(r.c_star_energy_per_eps[e]))
                    r.c_star_energy_per_eps[e] =
                        std::isnan(ee) ? kNaN : std::max(r.c_star_energy_per_eps[e], ee / r.target(Ns[n]));
            }
            if (n + 1 < nN) {
                const ErrorRecord& next = r.records[e * nN + n + 1];
                if (next.ok()) {
                    rec.rate_raw = raw_rate(Ns[n], rec.max_norm_error, Ns[n + 1], next.max_norm_error);
                    rec.rate_corrected = corrected_rate(Ns[n], rec.max_norm_error, Ns[n + 1], next.max_norm_error);
                }
            }
        }
    }
    auto rates = [&](const std::vector<double>& E, std::vector<std::optional<double>>& raw,
                     std::vector<std::optional<double>>& cor) {
        raw.assign(nN, std::nullopt);
        cor.assign(nN, std::nullopt);
        for (std::size_t n = 0; n + 1 < nN; ++n) {
            raw[n] = raw_rate(Ns[n], E[n], Ns[n + 1], E[n + 1]);
            cor[n] = corrected_rate(Ns[n], E[n], Ns[n + 1], E[n + 1]);
        }
    };
    rates(r.uniform_error, r.rate_raw, r.rate_corrected);
    rates(r.uniform_energy_error, r.energy_rate_raw, r.energy_rate_corrected);
    r.c_star = 0.0;
    for (std::size_t n = 0; n < nN; ++n) {
        if (std::isnan(r.uniform_error[n])) {
            r.c_star = kNaN;
            break;
        }
        r.c_star = std::max(r.c_star, r.uniform_error[n] / r.target(Ns[n]));
    }
    for (std::size_t n = 0; n + 1 < nN; ++n) {
        const double a = r.uniform_error[n], b = r.uniform_error[n + 1];
        if (std::isnan(a) || std::isnan(b) || b <= a) continue;
        char buf[160];
        std::snprintf(buf, sizeof buf, "E(N) increases from N=%zu to N=%zu by %.2f%%%s", Ns[n], Ns[n + 1],
                      100.0 * (b / a - 1.0), b < 1.05 * a ? " (tolerated)" : "");
        r.warnings.emplace_back(buf);
    }
}

// ---------------------------------------------------------------------------
// Sweeps

int sweep_threads() {
    if (const char* s = std::getenv("SPBVP_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(s, &end, 10);
        if (end != s && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    return omp_get_max_threads();
}

namespace {

struct EpsContext {
    ProblemInstance instance;
    ReferenceSolution reference;
    std::optional<ReferenceSolution> asymptotic;
    std::optional<ReferenceSolution> check;  // oracle at twice the resolution
    std::string failure;
};

ReferenceSolution fine_mesh_oracle(const SweepConfig& cfg, const SystemProblem& p, std::size_t n_ref) {
    const Mesh1D m = make_mesh(cfg.family, p, n_ref);
    DiscreteSolution s = solve(p, m, cfg.scheme);
    return ReferenceSolution::from_nodal(m, std::move(s.values), s.M,
                                         to_string(cfg.scheme) + " on " + m.label());
}

void prepare(const SweepConfig& cfg, double eps, std::size_t n_ref, EpsContext& ctx) {
    try {
        ctx.instance = make_builtin(cfg.problem, eps, n_ref);
        if (cfg.mu) ctx.instance.problem.hints.layer.mu = *cfg.mu;
        const ReferenceKind kind = ctx.instance.reference.kind;
        const bool fine = cfg.oracle == OracleMode::FineMesh ||
                          (cfg.oracle == OracleMode::Auto && kind == ReferenceKind::Asymptotic);
        if (fine) {
            ctx.reference = fine_mesh_oracle(cfg, ctx.instance.problem, n_ref);
            if (kind != ReferenceKind::FineMeshOracle) ctx.asymptotic = ctx.instance.reference;
            if (cfg.verify_oracle) ctx.check = fine_mesh_oracle(cfg, ctx.instance.problem, 2 * n_ref);
        } else {
            ctx.reference = ctx.instance.reference;
            if (cfg.verify_oracle && kind == ReferenceKind::FineMeshOracle)
                ctx.check = make_builtin(cfg.problem, eps, 2 * n_ref).reference;
        }
    } catch (const std::exception& ex) {
        ctx.failure = std::string("oracle: ") + ex.what();
    }
}

void run_cell(const SweepConfig& cfg, const EpsContext& ctx, std::size_t N, ErrorRecord& rec) {
    if (!ctx.failure.empty()) {
        rec.failure = ctx.failure;
        return;
    }
    try {
        const SystemProblem& p = ctx.instance.problem;
        rec.eps_list = p.eps;
        const Mesh1D mesh = make_mesh(cfg.family, p, N);
        rec.nodes = mesh.nodes();
        const DiscreteSolution sol = solve(p, mesh, cfg.scheme);
        rec.max_norm_error = max_norm_error(sol, ctx.reference);
        if (cfg.energy && ctx.reference.derivative) rec.energy_norm_error = energy_norm_error(sol, ctx.reference, p.diffusion);
        if (ctx.asymptotic) rec.asymptotic_gap = max_norm_error(sol, *ctx.asymptotic);
        const LayerEnvelope& env = ctx.instance.envelope;
        rec.quality = diagnostics_serial(mesh, [&env](double x) { return env(x, 1); }).quality.value_or(kNaN);
    } catch (const std::exception& ex) {
        rec.failure = ex.what();
    }
}

double oracle_gap(const SweepConfig& cfg, const EpsContext& ctx) {
    double gap = 0.0;
    for (std::size_t N : cfg.N_list) {
        const Mesh1D m = make_mesh(cfg.family, ctx.instance.problem, N);
        for (double x : m.points()) {
            const auto a = ctx.reference(x), b = (*ctx.check)(x);
            for (std::size_t k = 0; k < a.size(); ++k) gap = std::max(gap, std::abs(a[k] - b[k]));
        }
    }
    return gap;
}

ConvergenceReport run_sweep(const SweepConfig& cfg, bool parallel) {
    if (cfg.N_list.empty() || cfg.eps_list.empty()) throw std::invalid_argument("sweep: empty N or eps list");
    ConvergenceReport report;
    report.config = cfg;
    const std::size_t nN = cfg.N_list.size(), nE = cfg.eps_list.size();
    const std::size_t n_max = *std::max_element(cfg.N_list.begin(), cfg.N_list.end());
    const std::size_t factor = cfg.oracle_factor ? cfg.oracle_factor : (first_order(cfg.scheme) ? 64 : 16);
    const std::size_t n_ref = round_up(factor * n_max, 12);

    std::vector<EpsContext> ctx(nE);
    const int threads = parallel ? sweep_threads() : 1;
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (parallel)
    for (std::size_t e = 0; e < nE; ++e) prepare(cfg, cfg.eps_list[e], n_ref, ctx[e]);

    report.records.resize(nE * nN);
    for (std::size_t e = 0; e < nE; ++e) {
        for (std::size_t n = 0; n < nN; ++n) {
            ErrorRecord& rec = report.records[e * nN + n];
            rec.problem = cfg.problem;
            rec.family = cfg.family;
            rec.scheme = to_string(cfg.scheme);
            rec.N = cfg.N_list[n];
            rec.eps = cfg.eps_list[e];
        }
    }
    const std::size_t cells = nE * nN;
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (parallel)
    for (std::size_t c = 0; c < cells; ++c) run_cell(cfg, ctx[c / nN], cfg.N_list[c % nN], report.records[c]);

    report.oracle_gap.assign(nE, std::nullopt);
    for (std::size_t e = 0; e < nE; ++e) {
        if (ctx[e].check && ctx[e].failure.empty()) report.oracle_gap[e] = oracle_gap(cfg, ctx[e]);
    }

    const ProblemKind kind = ctx.front().failure.empty() ? ctx.front().instance.problem.kind : ProblemKind::WeaklyCoupled;
    report.target = cfg.target ? *cfg.target : default_target(cfg.family, cfg.scheme, kind);
    summarize(report);
    for (std::size_t e = 0; e < nE; ++e) {
        if (!report.oracle_gap[e]) continue;
        double smallest = std::numeric_limits<double>::infinity();
        for (std::size_t n = 0; n < nN; ++n) {
            const ErrorRecord& rec = report.at(e, n);
            if (rec.ok()) smallest = std::min(smallest, rec.max_norm_error);
        }
        if (*report.oracle_gap[e] > 0.1 * smallest) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "eps=%g: oracle refinement gap %.3e is not small against error %.3e",
                          cfg.eps_list[e], *report.oracle_gap[e], smallest);
            report.warnings.emplace_back(buf);
        }
    }
    return report;
}

}  // namespace

ConvergenceReport sweep(const SweepConfig& config) { return run_sweep(config, true); }

ConvergenceReport sweep_serial(const SweepConfig& config) { return run_sweep(config, false); }

// ---------------------------------------------------------------------------
// Reporting

namespace {

std::string num(double v, const char* fmt = "%.9e") {
    if (!std::isfinite(v)) return {};
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::string num(const std::optional<double>& v, const char* fmt = "%.6f") { return v ? num(*v, fmt) : std::string{}; }

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
    if (v && std::isfinite(*v)) return *v;
    return nullptr;
}

nlohmann::ordered_json num_json(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

std::string emit_csv(const ConvergenceReport& r) {
    std::ostringstream out;
    out << "family,scheme,N,eps,err_max,err_energy,Q,rate_raw,rate_corrected\n";
    const std::string scheme = to_string(r.config.scheme);
    for (const ErrorRecord& rec : r.records) {
        out << rec.family << ',' << rec.scheme << ',' << rec.N << ',' << num(rec.eps, "%.6g") << ','
            << (rec.ok() ? num(rec.max_norm_error) : "") << ',' << (rec.ok() ? num(rec.energy_norm_error, "%.9e") : "")
            << ',' << (rec.ok() ? num(rec.quality, "%.6e") : "") << ',' << num(rec.rate_raw) << ','
            << num(rec.rate_corrected) << '\n';
    }
    for (std::size_t n = 0; n < r.uniform_error.size(); ++n) {
        out << r.config.family << ',' << scheme << ',' << r.config.N_list[n] << ",uniform," << num(r.uniform_error[n])
            << ',' << num(r.uniform_energy_error[n]) << ",," << num(r.rate_raw[n]) << ','
            << num(r.rate_corrected[n]) << '\n';
    }
    return out.str();
}

std::string emit_json(const ConvergenceReport& r) {
    using nlohmann::ordered_json;
    ordered_json j;
    const SweepConfig& c = r.config;
    j["config"] = {{"problem", c.problem},
                   {"family", c.family},
                   {"scheme", to_string(c.scheme)},
                   {"N_list", c.N_list},
                   {"eps_list", c.eps_list},
                   {"energy", c.energy}};
    if (c.mu) j["config"]["mu"] = *c.mu;
    j["target"] = {{"order", r.target.order}, {"log_factor", r.target.log_factor}};
    ordered_json recs = ordered_json::array();
    for (const ErrorRecord& rec : r.records) {
        ordered_json o;
        o["problem"] = rec.problem;
        o["family"] = rec.family;
        o["scheme"] = rec.scheme;
        o["N"] = rec.N;
        o["eps"] = rec.eps;
        o["eps_list"] = rec.eps_list;
        o["nodes"] = rec.nodes;
        o["err_max"] = rec.ok() ? num_json(rec.max_norm_error) : nullptr;
        o["err_energy"] = opt_json(rec.energy_norm_error);
        o["Q"] = rec.ok() ? num_json(rec.quality) : nullptr;
        o["asymptotic_gap"] = opt_json(rec.asymptotic_gap);
        o["rate_raw"] = opt_json(rec.rate_raw);
        o["rate_corrected"] = opt_json(rec.rate_corrected);
        o["failure"] = rec.failure;
        recs.push_back(std::move(o));
    }
    j["records"] = std::move(recs);
    ordered_json uni = ordered_json::array();
    for (std::size_t n = 0; n < r.uniform_error.size(); ++n) {
        uni.push_back({{"N", c.N_list[n]},
                       {"err_max", num_json(r.uniform_error[n])},
                       {"err_energy", num_json(r.uniform_energy_error[n])},
                       {"rate_raw", opt_json(r.rate_raw[n])},
                       {"rate_corrected", opt_json(r.rate_corrected[n])}});
    }
    j["uniform"] = std::move(uni);
    j["c_star"] = num_json(r.c_star);
    ordered_json per = ordered_json::array();
    for (double v : r.c_star_per_eps) per.push_back(num_json(v));
    j["c_star_per_eps"] = std::move(per);
    ordered_json gaps = ordered_json::array();
    for (const auto& g : r.oracle_gap) gaps.push_back(opt_json(g));
    j["oracle_gap"] = std::move(gaps);
    j["warnings"] = r.warnings;
    j["failures"] = r.failures;
    return j.dump(2) + "\n";
}

}  // namespace

std::string report_emit(const ConvergenceReport& report, ReportFormat format) {
    return format == ReportFormat::Csv ? emit_csv(report) : emit_json(report);
}

void report_write(const ConvergenceReport& report, ReportFormat format, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << report_emit(report, format);
    if (!f.flush()) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace spbvp
