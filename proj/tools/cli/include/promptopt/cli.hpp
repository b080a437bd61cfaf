#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "promptopt/config.hpp"

namespace promptopt::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,       // bad arguments, unreadable input, invalid data or config
  kResumable = 3,   // backend gave out; the run can be resumed
  kIncomplete = 4,  // select was given a run that has not completed
};

struct Io {
  std::ostream& out;
  std::ostream& err;
  EnvLookup env = process_env;
};

// `args` includes the program name, as in argv.
int run(const std::vector<std::string>& args, const Io& io);

}  // namespace promptopt::cli
