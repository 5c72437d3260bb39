#include "spbvp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

namespace spbvp::cli {

namespace {

using nlohmann::json;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

DenseMatrix matrix_from_json(const json& j, std::size_t m, const char* what) {
    if (!j.is_array() || j.size() != m) throw ConfigError(std::string(what) + " must be a " + std::to_string(m) + "x" +
                                                          std::to_string(m) + " array");
    DenseMatrix a(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!j[i].is_array() || j[i].size() != m) throw ConfigError(std::string(what) + ": bad row " + std::to_string(i));
        for (std::size_t k = 0; k < m; ++k) a(i, k) = j[i][k].get<double>();
    }
    return a;
}

std::vector<double> vector_from_json(const json& j, std::size_t m, const char* what) {
    if (!j.is_array() || j.size() != m) throw ConfigError(std::string(what) + " must have " + std::to_string(m) + " entries");
    return j.get<std::vector<double>>();
}

json check_json(const MatrixCheck& c) {
    json rows = json::array();
    for (std::size_t i = 0; i < c.matrix.rows(); ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < c.matrix.cols(); ++k) row.push_back(c.matrix(i, k));
        rows.push_back(std::move(row));
    }
    return json{{"matrix", rows},
                {"inverse_nonnegative", c.inverse_nonnegative},
                {"min_inverse_entry", std::isfinite(c.min_inverse_entry) ? json(c.min_inverse_entry) : json(nullptr)},
                {"reason", c.reason}};
}

std::ifstream open_input(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open '" + path + "'");
    return f;
}

json read_json(const std::string& path) {
    auto f = open_input(path);
    try {
        return json::parse(f);
    } catch (const json::exception& ex) {
        throw ConfigError("'" + path + "': " + ex.what());
    }
}

// Layer-envelope density 1 + (gamma/eps) e^{-gamma d/eps} for the mesh footer.
std::function<double(double)> layer_density(const LayerSpec& s) {
    return [s](double x) {
        const double r = s.gamma / s.eps;
        double v = 0.0;
        if (s.side != LayerSide::Right) v += r * std::exp(-r * x);
        if (s.side != LayerSide::Left) v += r * std::exp(-r * (1.0 - x));
        return 1.0 + v;
    };
}

struct MeshOptions {
    std::string family = "shishkin";
    double eps = 1e-4, gamma = 1.0, mu = 1.0;
    std::string side = "left";
    std::size_t N = 64;
    std::optional<double> H;
    double kappa = 1.0;
    double q = 0.5;
    double K = 2.0;
    std::vector<double> eps_list;
    double sigma = 1.0, beta = 1.0;
    bool initial_uniform = false;
    bool literal = false;
};

int run_mesh(const MeshOptions& o, std::ostream& out) {
    const LayerSpec spec{o.eps, o.gamma, o.mu, parse_layer_side(o.side)};
    spec.validate();
    const double H = o.H ? *o.H : 1.0 / static_cast<double>(o.N);
    std::vector<std::string> extra;
    std::optional<Mesh1D> mesh;
    const std::string& f = o.family;
    if (f == "uniform") mesh = Mesh1D::uniform(o.N);
    else if (f == "shishkin") mesh = shishkin(spec, o.N);
    else if (f == "bakhvalov_shishkin") mesh = shishkin_type(spec, o.N, MeshCharFn::bakhvalov_shishkin(o.N));
    else if (f == "bakhvalov_type") mesh = bakhvalov_type(spec, o.N);
    else if (f == "bakhvalov") {
        mesh = bakhvalov_original(spec, o.N, o.q);
        const auto tau = bakhvalov_tau(spec, o.q);
        extra.push_back("tau=" + (tau ? num(*tau) : std::string("none")));
    } else if (f == "gartland") mesh = gartland(spec, H);
    else if (f == "gartland_type") mesh = gartland(spec, H, GartlandVariant::GartlandType);
    else if (f == "duran_lombardi")
        mesh = duran_lombardi(spec, H, o.kappa,
                              o.initial_uniform ? DuranLombardiVariant::InitialUniform : DuranLombardiVariant::Geometric);
    else if (f == "lambert") mesh = lambert_mesh(spec, o.N, o.literal ? LambertForm::Literal : LambertForm::SignCorrected);
    else if (f == "equidistributed") {
        auto r = equidistribute_layer(spec, o.N, o.K);
        extra.push_back("iterations=" + std::to_string(r.iterations));
        extra.push_back("residual=" + num(r.residual));
        extra.push_back(std::string("converged=") + (r.converged ? "true" : "false"));
        mesh = std::move(r.mesh);
    } else if (f == "system_shishkin") {
        std::vector<double> eps = o.eps_list.empty() ? std::vector<double>{o.eps} : o.eps_list;
        std::sort(eps.begin(), eps.end());
        mesh = system_shishkin(eps, o.sigma, o.beta, o.N, spec.side);
    } else {
        throw std::invalid_argument("unknown mesh family '" + f + "'");
    }
    const Mesh1D& m = *mesh;
    out << "i,x_i,h_i\n";
    for (std::size_t i = 0; i < m.nodes(); ++i) {
        out << i << ',' << num(m.x(i)) << ',';
        if (i > 0) out << num(m.h(i));
        out << '\n';
    }
    const MeshDiagnostics d = diagnostics(m, layer_density(spec));
    out << "# label=" << m.label() << '\n'
        << "# cells=" << m.cells() << '\n'
        << "# min_h=" << num(d.min_h) << '\n'
        << "# max_h=" << num(d.max_h) << '\n'
        << "# local_ratio=" << num(d.local_ratio) << '\n'
        << "# quality=" << (d.quality ? num(*d.quality) : std::string("n/a")) << '\n';
    for (const auto& e : extra) out << "# " << e << '\n';
    return kExitOk;
}

struct SolveOptions {
    std::string problem = "scalar_cd";
    std::string problem_json;
    double eps = 1e-4;
    std::string family = "shishkin";
    std::size_t N = 64;
    std::string scheme = "upwind";
    std::optional<double> mu;
    std::size_t n_ref = 4096;
};

int run_solve(const SolveOptions& o, std::ostream& out, std::ostream& err) {
    ProblemInstance inst = o.problem_json.empty() ? make_builtin(o.problem, o.eps, o.n_ref)
                                                  : problem_from_json(read_json(o.problem_json));
    if (o.mu) inst.problem.hints.layer.mu = *o.mu;
    const Mesh1D mesh = make_mesh(o.family, inst.problem, o.N);
    const Scheme scheme = parse_scheme(o.scheme);
    const DiscreteOperator op = scheme == Scheme::Ias ? ias_assemble(inst.problem, mesh)
                                                      : assemble(inst.problem, mesh, scheme);
    for (const auto& w : op.warnings) err << "warning: " << w << '\n';
    const DiscreteSolution sol = solve(op, mesh, inst.problem.name, to_string(scheme));
    out << 'x';
    for (std::size_t k = 0; k < sol.M; ++k) out << ",u_" << k + 1;
    out << '\n';
    for (std::size_t i = 0; i < mesh.nodes(); ++i) {
        out << num(mesh.x(i));
        for (std::size_t k = 0; k < sol.M; ++k) out << ',' << num(sol.value(i, k));
        out << '\n';
    }
    return kExitOk;
}

int run_check(const std::string& path, const std::vector<double>& C, std::ostream& out) {
    const ProblemInstance inst = problem_from_json(read_json(path));
    out << to_json(check_stability(inst.problem, C)).dump(2) << '\n';
    return kExitOk;
}

int run_study(const std::string& path, const std::string& format_flag, std::ostream& out, std::ostream& err) {
    SweepConfig cfg;
    std::string output;
    try {
        cfg = study_config_from_json(read_json(path), &output);
    } catch (const ConfigError& ex) {
        err << "config error: " << ex.what() << '\n';
        return kExitConfigError;
    }
    ReportFormat fmt = ReportFormat::Csv;
    const std::string ext = output.size() >= 5 ? output.substr(output.size() - 5) : "";
    if (format_flag == "json" || (format_flag.empty() && ext == ".json")) fmt = ReportFormat::Json;
    const ConvergenceReport report = sweep(cfg);
    if (output.empty() || output == "-") {
        out << report_emit(report, fmt);
    } else {
        report_write(report, fmt, output);
        out << "wrote " << output << '\n';
    }
    for (const auto& w : report.warnings) err << "warning: " << w << '\n';
    if (report.failures > 0) {
        for (const ErrorRecord& r : report.records)
            if (!r.ok()) err << "cell N=" << r.N << " eps=" << num(r.eps) << " failed: " << r.failure << '\n';
        return kExitCellFailure;
    }
    return kExitOk;
}

}  // namespace

ProblemInstance problem_from_json(const json& doc) {
    try {
        if (!doc.is_object()) throw ConfigError("problem document must be an object");
        if (doc.contains("builtin")) {
            const double eps = doc.value("eps", 1e-4);
            return make_builtin(doc.at("builtin").get<std::string>(), eps, doc.value("n_ref", std::size_t{4096}));
        }
        ProblemInstance inst;
        SystemProblem& p = inst.problem;
        p.name = doc.value("name", std::string("custom"));
        p.kind = parse_problem_kind(doc.value("kind", std::string("weakly_coupled")));
        p.eps = doc.at("eps").get<std::vector<double>>();
        const std::size_t m = p.eps.size();
        if (m == 0) throw ConfigError("eps must be non-empty");
        for (double e : p.eps) p.diffusion.push_back(p.kind == ProblemKind::ReactionDiffusion ? e * e : e);
        if (doc.contains("B")) p.B = MatrixField::constant(matrix_from_json(doc["B"], m, "B"));
        p.A = MatrixField::constant(doc.contains("A") ? matrix_from_json(doc["A"], m, "A") : DenseMatrix(m, m));
        p.f = VectorField::constant(doc.contains("f") ? vector_from_json(doc["f"], m, "f") : std::vector<double>(m, 0.0));
        p.g0 = doc.contains("g0") ? vector_from_json(doc["g0"], m, "g0") : std::vector<double>(m, 0.0);
        p.g1 = doc.contains("g1") ? vector_from_json(doc["g1"], m, "g1") : std::vector<double>(m, 0.0);
        std::vector<double> sorted = p.eps;
        std::sort(sorted.begin(), sorted.end());
        p.hints.eps_list = sorted;
        p.hints.layer = {sorted.front(), 1.0, 1.0, LayerSide::Left};
        if (doc.contains("layer")) {
            const json& l = doc["layer"];
            p.hints.layer.eps = l.value("eps", sorted.front());
            p.hints.layer.gamma = l.value("gamma", 1.0);
            p.hints.layer.mu = l.value("mu", 1.0);
            p.hints.layer.side = parse_layer_side(l.value("side", std::string("left")));
        }
        p.hints.system_sigma = doc.value("sigma", 1.0);
        p.hints.system_beta = doc.value("beta", 1.0);
        p.validate();
        inst.envelope.terms = {{p.hints.layer.scale(), p.hints.layer.gamma, p.hints.layer.side}};
        return inst;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& ex) {
        throw ConfigError(ex.what());
    }
}

json to_json(const StabilityReport& r) {
    json j;
    j["gamma"] = check_json(r.gamma);
    j["diag_dominant"] = r.diag_dominant;
    j["zeta"] = r.zeta;
    j["kappa"] = r.kappa ? json(*r.kappa) : json(nullptr);
    j["upsilon"] = r.upsilon ? check_json(*r.upsilon) : json(nullptr);
    j["upsilon_constants"] = r.upsilon_constants;
    j["upsilon_heuristic"] = r.upsilon_heuristic;
    return j;
}

SweepConfig study_config_from_json(const json& doc, std::string* output) {
    try {
        if (!doc.is_object()) throw ConfigError("study config must be an object");
        for (const char* key : {"problem", "scheme", "mesh", "N_list", "eps_list"})
            if (!doc.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
        SweepConfig c;
        c.problem = doc["problem"].get<std::string>();
        const auto names = builtin_names();
        if (std::find(names.begin(), names.end(), c.problem) == names.end())
            throw ConfigError("unknown problem '" + c.problem + "'");
        c.scheme = parse_scheme(doc["scheme"].get<std::string>());
        c.family = doc["mesh"].get<std::string>();
        const auto fams = mesh_family_names();
        if (std::find(fams.begin(), fams.end(), c.family) == fams.end())
            throw ConfigError("unknown mesh family '" + c.family + "'");
        c.N_list = doc["N_list"].get<std::vector<std::size_t>>();
        c.eps_list = doc["eps_list"].get<std::vector<double>>();
        if (c.N_list.empty() || c.eps_list.empty()) throw ConfigError("N_list and eps_list must be non-empty");
        for (double e : c.eps_list)
            if (!(e > 0.0)) throw ConfigError("eps values must be positive");
        for (std::size_t n : c.N_list)
            if (n < 2) throw ConfigError("N values must be at least 2");
        c.energy = doc.value("energy", false);
        c.verify_oracle = doc.value("verify_oracle", false);
        c.oracle_factor = doc.value("oracle_factor", std::size_t{0});
        if (doc.contains("mu")) c.mu = doc["mu"].get<double>();
        if (doc.contains("oracle")) {
            const std::string o = doc["oracle"].get<std::string>();
            if (o == "auto") c.oracle = OracleMode::Auto;
            else if (o == "builtin") c.oracle = OracleMode::Builtin;
            else if (o == "fine_mesh") c.oracle = OracleMode::FineMesh;
            else throw ConfigError("unknown oracle mode '" + o + "'");
        }
        if (output) *output = doc.value("output", std::string());
        return c;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& ex) {
        throw ConfigError(ex.what());
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Layer-adapted meshes and uniform convergence studies for singularly perturbed BVPs", "spbvp"};
    app.require_subcommand(1);

    MeshOptions mo;
    auto* mesh = app.add_subcommand("mesh", "Generate a mesh; CSV i,x_i,h_i with # diagnostics");
    mesh->add_option("--family", mo.family, "uniform, shishkin, bakhvalov_shishkin, bakhvalov_type, bakhvalov, "
                                            "gartland, gartland_type, duran_lombardi, lambert, equidistributed, "
                                            "system_shishkin");
    mesh->add_option("--eps", mo.eps);
    mesh->add_option("--gamma", mo.gamma);
    mesh->add_option("--mu", mo.mu);
    mesh->add_option("--side", mo.side, "left, right or both");
    mesh->add_option("-N,--cells", mo.N);
    mesh->add_option("--H", mo.H, "coarse step for gartland and duran_lombardi (default 1/N)");
    mesh->add_option("--kappa", mo.kappa);
    mesh->add_option("--q", mo.q, "Bakhvalov q");
    mesh->add_option("--K", mo.K, "monitor amplitude for equidistribution");
    mesh->add_option("--eps-list", mo.eps_list, "system_shishkin eps values");
    mesh->add_option("--sigma", mo.sigma);
    mesh->add_option("--beta", mo.beta);
    mesh->add_flag("--initial-uniform", mo.initial_uniform, "duran_lombardi uniform start");
    mesh->add_flag("--literal", mo.literal, "lambert: literal exponent sign");

    SolveOptions so;
    std::optional<double> solve_mu;
    auto* solve_cmd = app.add_subcommand("solve", "Solve a problem; CSV x,u_1..u_M");
    solve_cmd->add_option("--problem", so.problem, "built-in name");
    solve_cmd->add_option("--problem-json", so.problem_json, "problem definition file");
    solve_cmd->add_option("--eps", so.eps);
    solve_cmd->add_option("--family", so.family);
    solve_cmd->add_option("-N,--cells", so.N);
    solve_cmd->add_option("--scheme", so.scheme, "upwind, midpoint_upwind, central, ias, fem");
    solve_cmd->add_option("--mu", solve_mu);
    solve_cmd->add_option("--n-ref", so.n_ref, "oracle cells for built-ins with a fine-mesh reference");

    std::string check_path;
    std::vector<double> check_C;
    auto* check = app.add_subcommand("check", "Stability report of a JSON problem");
    check->add_option("problem", check_path, "problem JSON file")->required();
    check->add_option("--C", check_C, "per-equation constants for the upsilon check");

    std::string study_path, study_format;
    auto* study = app.add_subcommand("study", "Run an (N, eps) convergence sweep from a JSON config");
    study->add_option("config", study_path, "study JSON file")->required();
    study->add_option("--format", study_format, "csv or json (default from output extension)")
        ->check(CLI::IsMember({"csv", "json"}));

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }
    so.mu = solve_mu;
    try {
        if (*mesh) return run_mesh(mo, out);
        if (*solve_cmd) return run_solve(so, out, err);
        if (*check) return run_check(check_path, check_C, out);
        if (*study) return run_study(study_path, study_format, out, err);
    } catch (const ConfigError& ex) {
        err << "config error: " << ex.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace spbvp::cli
