#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace varscope::cli {

inline constexpr const char* kVersion = "0.1.0";

// Runs one varscope invocation. Exit code 0 on success, 2 on usage errors,
// 1 on domain errors (message on `err`).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace varscope::cli
