#pragma once

namespace frgen {

// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
int run_cli(int argc, char** argv);

}  // namespace frgen
