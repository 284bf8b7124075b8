#pragma once

#include <string>
#include <vector>

namespace zenlda {

// Entry point behind the zenlda binary. Returns 0 on success, 1 on usage
// errors, 2 on runtime failures.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace zenlda
