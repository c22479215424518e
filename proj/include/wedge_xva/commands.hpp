#pragma once

#include "wedge_xva/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>

namespace wxva {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNumerical = 3, kExitIo = 4 };

struct CommandOptions {
    std::filesystem::path cache_dir;
    int threads = 1;
    std::optional<std::uint64_t> seed;  // overrides the scenario's Monte Carlo seed
    bool strict = false;                // warnings (SE gaps, residuals, truncation bounds) become failures
    bool header = true;                 // timestamped first line on emitted files
    double tolerance_scale = 1.0;       // validate only: multiplies every tolerance
};

/// Runs `body`, mapping DomainError to 2, NumericalError to 3 and IoError to 4, with the
/// message on `err`.
int run_guarded(const std::function<int()>& body, std::ostream& err);

/// Each command writes its files to scenario.run.outputs and a short summary to `out`.
int cmd_calibrate(const ScenarioFile& s, const CommandOptions& o, std::ostream& out);
int cmd_mesh(const ScenarioFile& s, const CommandOptions& o, std::ostream& out);
int cmd_eigen(const ScenarioFile& s, const CommandOptions& o, std::ostream& out);
int cmd_survival(const ScenarioFile& s, const CommandOptions& o, std::ostream& out);
int cmd_price(const ScenarioFile& s, const CommandOptions& o, std::ostream& out);

/// Oracle suite: one line per check with the measured error and tolerance. Returns 0 iff all
/// pass, 3 otherwise. Wall times are part of the header material and vanish with header = false.
int cmd_validate(const CommandOptions& o, std::ostream& out);

/// "%.11e": twelve significant digits.
std::string csv_number(double v);

} // namespace wxva
