#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace byod::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

// Subcommands: simulate, policy, capacity, probe, audit, validate, portal.
// JSON goes to `out`, diagnostics to `err`. If BYODSIM_CONFIG names a JSON
// file, its per-subcommand sections supply defaults for flags not given.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace byod::cli
