#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "batdiff/image.hpp"
#include "config.hpp"

namespace batdiff::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitNumeric = 3,
};

int cmd_train(const RunConfig& cfg, std::ostream& log);
int cmd_infer(const RunConfig& cfg, std::ostream& log);
int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_ablate(const RunConfig& cfg, std::ostream& out, std::ostream& log);

/// Parses argv, dispatches, and maps exceptions to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Loads an image file, or builds the test pattern for "synthetic:<size>".
Image load_input(const std::string& spec);

/// Worker count from BATDIFF_THREADS; hardware concurrency when unset.
int thread_count();

}  // namespace batdiff::cli
