// cli.hpp — command-line front end; returns the process exit code
// (0 success, 1 numerical failure, 2 usage/config error).

#pragma once

namespace nhscatter {

int run_cli(int argc, const char* const* argv);

}  // namespace nhscatter
