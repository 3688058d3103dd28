#pragma once

#include <iosfwd>
#include <string>

#include "bvsa/config.hpp"

namespace bvsa {

enum class Command { Summarize, Fit, Measures, Check, Compare, Simulate };

Command command_from_name(const std::string& name);

// Runs one command against the configured inputs, writing artifacts into the
// configured output directory. Returns the process exit status: 0 on
// success, 1 for validation or runtime errors, 2 when a fit fails the R-hat
// gate and allow_nonconverged is off.
int run_pipeline(const RunConfig& cfg, Command command, std::ostream& log);

}  // namespace bvsa
