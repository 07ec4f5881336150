#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "scenario.hpp"

namespace wfrho::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_check_failed = 1,  // verify found a failing suite
    exit_unconverged = 2,
    exit_invalid_scenario = 3,
    exit_solver_abort = 4,
};

struct RunOptions {
    std::filesystem::path out_dir = ".";
    int threads = 0;  // 0 keeps the OpenMP default
};

// Runs s.run.mode and writes its artifacts to out_dir. Solver errors become exit codes plus an error.json record.
int run(const Scenario& s, const RunOptions& opt, std::ostream& log);

// Writes the error record for a failure outside run() (parse errors) and returns `code`.
int report_error(const std::filesystem::path& out_dir, int code, const std::string& kind, const std::string& message,
                 std::ostream& log);

}  // namespace wfrho::cli
