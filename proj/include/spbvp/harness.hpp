#pragma once

// Error norms, (N, eps) convergence sweeps, rate fitting and reporting.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "spbvp/discretize.hpp"
#include "spbvp/mesh.hpp"
#include "spbvp/problems.hpp"

namespace spbvp {

/// Discrete maximum over nodes and components of |u(x_i) - u_i|.
double max_norm_error(const DiscreteSolution& sol, const ReferenceSolution& ref);

/// (sum_k diffusion_k |e_k|_1^2 + ||e_k||_0^2)^{1/2} for e = u - I u^N, where
/// I u^N is the piecewise-linear interpolant. Needs ref.derivative; cell
/// integrals by adaptive quadrature.
double energy_norm_error(const DiscreteSolution& sol, const ReferenceSolution& ref,
                         const std::vector<double>& diffusion);

/// Mesh families known to make_mesh.
std::vector<std::string> mesh_family_names();

/// Builds a mesh of the named family from the problem's hints. Families
/// parameterised by a coarse step use H = 1/N.
Mesh1D make_mesh(const std::string& family, const SystemProblem& problem, std::size_t N);

/// Error is compared against target(N) = (N^{-1} ln N)^order, or N^{-order}
/// when log_factor is false.
struct RateTarget {
    int order = 1;
    bool log_factor = true;

    double operator()(std::size_t N) const;
};

/// Default target for a family/scheme/problem combination.
RateTarget default_target(const std::string& family, Scheme scheme, ProblemKind kind);

/// Rate between consecutive list entries, log(E0/E1) / log(N1/N0).
std::optional<double> raw_rate(std::size_t n0, double e0, std::size_t n1, double e1);
/// As raw_rate with N replaced by 1/(N^{-1} ln N).
std::optional<double> corrected_rate(std::size_t n0, double e0, std::size_t n1, double e1);

struct ErrorRecord {
    std::string problem;
    std::string family;
    std::string scheme;
    std::size_t N = 0;
    double eps = 0.0;
    std::vector<double> eps_list;
    std::size_t nodes = 0;
    double max_norm_error = 0.0;
    std::optional<double> energy_norm_error;
    /// Largest cell integral of the first-derivative layer envelope.
    double quality = 0.0;
    /// max |u^N - reference formula| when the problem ships an asymptotic formula
    /// but errors are measured against a fine-mesh oracle.
    std::optional<double> asymptotic_gap;
    /// Per-eps rates towards the next N in the list.
    std::optional<double> rate_raw;
    std::optional<double> rate_corrected;
    std::string failure;

    bool ok() const { return failure.empty(); }
};

enum class OracleMode { Auto, Builtin, FineMesh };

struct SweepConfig {
    std::string problem = "scalar_cd";
    std::string family = "shishkin";
    Scheme scheme = Scheme::SimpleUpwind;
    std::vector<std::size_t> N_list{64, 128, 256, 512, 1024};
    std::vector<double> eps_list{1e-2, 1e-4, 1e-6, 1e-8, 1e-10};
    bool energy = false;
    OracleMode oracle = OracleMode::Auto;
    /// Oracle cells = factor * max N; 0 picks 64 for first-order schemes and 16 otherwise.
    std::size_t oracle_factor = 0;
    /// Also build the oracle at twice the resolution and record the gap.
    bool verify_oracle = false;
    std::optional<RateTarget> target;
    /// Overrides the layer order parameter mu of the problem's mesh hints.
    std::optional<double> mu;
};

struct ConvergenceReport {
    SweepConfig config;
    RateTarget target;
    /// Row-major over (eps, N): records[e * N_list.size() + n].
    std::vector<ErrorRecord> records;

    /// E(N) = max over eps; NaN when any cell at that N failed.
    std::vector<double> uniform_error;
    std::vector<std::optional<double>> rate_raw;
    std::vector<std::optional<double>> rate_corrected;
    /// max_N E(N) / target(N).
    double c_star = 0.0;
    /// Same constant per eps.
    std::vector<double> c_star_per_eps;

    std::vector<double> uniform_energy_error;
    std::vector<std::optional<double>> energy_rate_raw;
    std::vector<std::optional<double>> energy_rate_corrected;
    std::vector<double> c_star_energy_per_eps;

    /// Per eps, max |oracle(n_ref) - oracle(2 n_ref)| on the oracle nodes.
    std::vector<std::optional<double>> oracle_gap;
    std::vector<std::string> warnings;
    std::size_t failures = 0;

    const ErrorRecord& at(std::size_t eps_index, std::size_t n_index) const {
        return records[eps_index * config.N_list.size() + n_index];
    }
    /// max/min of c_star_per_eps over eps <= eps_max; NaN if undefined.
    double c_star_spread(double eps_max = 1.0) const;
    /// Rate of the last pair in the list, the most asymptotic one.
    std::optional<double> finest_rate_raw() const;
    std::optional<double> finest_rate_corrected() const;
};

/// Worker count: SPBVP_THREADS when set to a positive integer, else the
/// OpenMP default.
int sweep_threads();

/// Cells run in parallel; the report is reduced serially and is identical to
/// sweep_serial for the same configuration. Solve failures are recorded per cell.
ConvergenceReport sweep(const SweepConfig& config);
ConvergenceReport sweep_serial(const SweepConfig& config);

/// Rebuilds rates and constants from report.records.
void summarize(ConvergenceReport& report);

enum class ReportFormat { Csv, Json };

/// CSV columns family,scheme,N,eps,err_max,err_energy,Q,rate_raw,rate_corrected,
/// one row per record followed by one row per N with eps = "uniform".
std::string report_emit(const ConvergenceReport& report, ReportFormat format);
/// Writes report_emit output to path; throws std::runtime_error on I/O failure.
void report_write(const ConvergenceReport& report, ReportFormat format, const std::string& path);

}  // namespace spbvp
