#pragma once

#include "scm/diagnostics.hpp"
#include "scm/problem.hpp"
#include "scm/scm_solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace scm::io {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Environment variable overriding the default seed of a config file that
/// does not set one.
inline constexpr const char* kSeedEnvVar = "SCM_SEED";

/// Malformed or invalid input; the message names the offending field.
class InputError : public Error {
public:
    using Error::Error;
};

enum ExitCode : int {
    kExitSuccess = 0,
    kExitInputError = 1,
    kExitIterationBudget = 2,
    kExitInfeasible = 3,
    kExitVerificationFailed = 4,
};

Problem parse_problem(const Json& j);
Json to_json(const Problem& problem);
Problem load_problem(const std::filesystem::path& path);

/// `allow_nonsummable_errors` mirrors the --unsafe-error gate.
ScmConfig parse_config(const Json& j, bool allow_nonsummable_errors = false);
Json to_json(const ScmConfig& cfg);
ScmConfig load_config(const std::filesystem::path& path, bool allow_nonsummable_errors = false);

Json to_json(const IterationRecord& record);
IterationRecord parse_iteration_record(const Json& j);
/// One record per line, each line a JSON object.
std::string trace_to_jsonl(const std::vector<IterationRecord>& trace);

Json to_json(const diagnostics::CheckReport& report);

Json summary_json(const SolveResult& result, const Problem& problem);

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct SolveCommand {
    std::filesystem::path problem;
    std::filesystem::path config;
    std::filesystem::path trace;
    std::filesystem::path summary;
    bool unsafe_error = false;
};

int cli_solve(const SolveCommand& cmd, std::ostream& log);
int cli_oracle(const std::filesystem::path& problem, const std::filesystem::path& out, std::ostream& log);
int cli_verify(const std::filesystem::path& problem, const std::filesystem::path& config,
               const std::filesystem::path& report, std::ostream& log);

}  // namespace scm::io
