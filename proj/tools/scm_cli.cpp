#include "scm/cli_io.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Sequential constraint method for variational inequalities over common fixed point sets"};
    app.require_subcommand(1);

    scm::io::SolveCommand solve_cmd;
    auto* solve = app.add_subcommand("solve", "Run the solver; writes a JSONL trace and a JSON summary");
    solve->add_option("--problem", solve_cmd.problem, "Problem JSON")->required();
    solve->add_option("--config", solve_cmd.config, "Config JSON")->required();
    solve->add_option("--trace", solve_cmd.trace, "Trace output (JSONL)");
    solve->add_option("--summary", solve_cmd.summary, "Summary output (JSON)");
    solve->add_flag("--unsafe-error", solve_cmd.unsafe_error,
                    "Accept error models whose norms are not summable (q <= 1)");

    std::filesystem::path oracle_problem;
    std::filesystem::path oracle_out;
    auto* oracle = app.add_subcommand("oracle", "Compute the reference solution with exact projections");
    oracle->add_option("--problem", oracle_problem, "Problem JSON")->required();
    oracle->add_option("--out", oracle_out, "Solution output (JSON)")->required();

    std::filesystem::path verify_problem;
    std::filesystem::path verify_config;
    std::filesystem::path verify_out;
    auto* verify = app.add_subcommand("verify", "Run the diagnostics suite; writes a JSON report");
    verify->add_option("--problem", verify_problem, "Problem JSON")->required();
    verify->add_option("--config", verify_config, "Config JSON")->required();
    verify->add_option("--out", verify_out, "Report output (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : scm::io::kExitInputError;
    }

    if (*solve) return scm::io::cli_solve(solve_cmd, std::cerr);
    if (*oracle) return scm::io::cli_oracle(oracle_problem, oracle_out, std::cerr);
    return scm::io::cli_verify(verify_problem, verify_config, verify_out, std::cerr);
}
