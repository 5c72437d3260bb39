#pragma once

// Command-line front end: subcommands mesh, solve, check and study.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "spbvp/harness.hpp"
#include "spbvp/problems.hpp"

namespace spbvp::cli {

/// Exit codes of the study subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitCellFailure = 2;
inline constexpr int kExitConfigError = 3;

/// Raised for malformed problem or study documents.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Problem from JSON. Either {"builtin": name, "eps": value} or an inline
/// constant-coefficient system {"kind", "eps": [...], "A", "B", "f", "g0", "g1"}.
ProblemInstance problem_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const StabilityReport& report);

/// Study configuration {problem, scheme, mesh, N_list, eps_list, output, ...}.
SweepConfig study_config_from_json(const nlohmann::json& doc, std::string* output = nullptr);

/// Runs the CLI with args excluding the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spbvp::cli
