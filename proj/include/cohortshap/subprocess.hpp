#pragma once

#include <string>
#include <string_view>

namespace cohortshap {

struct CommandResult {
  int exit_code = 0;  // -1 when terminated by a signal
  std::string out;
  std::string err;
};

// Runs `command` through /bin/sh -c, feeding `input` on standard input and
// closing it, while collecting standard output and error.
CommandResult run_command(const std::string& command, std::string_view input);

}  // namespace cohortshap
