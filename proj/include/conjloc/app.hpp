#pragma once

#include "conjloc/config.hpp"

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace conjloc {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
};

std::vector<std::string_view> subcommand_names();

// Applies CONJLOC_THREADS and expands threads = 0 to the hardware count.
RunConfig resolve_threads(RunConfig config);

// Runs one pipeline stage and writes its files (each with a .meta sidecar)
// under config.output_dir. Library errors are mapped onto exit codes; a
// numerical failure also leaves diagnostics.txt in the output directory.
int run_subcommand(std::string_view name, const RunConfig& config,
                   std::ostream& log,
                   const std::vector<std::string>& verify_ids = {});

}  // namespace conjloc
