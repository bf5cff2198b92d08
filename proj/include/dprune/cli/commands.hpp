#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "dprune/cli/config.hpp"
#include "dprune/dataset.hpp"

namespace dprune::cli {

// Exit codes of the dprune tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // bad flags or configuration
inline constexpr int kExitRuntime = 2;  // I/O, format or numerical failure

// Entry point shared by the executable and the tests. `args` excludes the
// program name. Normal output goes to `out`, progress and errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Train and test splits selected by the config (MNIST files or blobs).
std::pair<Dataset, Dataset> load_datasets(const RunConfig& cfg);

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_prune(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_ist(const RunConfig& cfg, std::ostream& out);
int cmd_mwvc(const RunConfig& cfg, std::ostream& out);
int cmd_report(const std::filesystem::path& summary, std::ostream& out);

}  // namespace dprune::cli
