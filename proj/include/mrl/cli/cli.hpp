#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace mrl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

// Runs one invocation. `args` excludes the program name. Returns 0 on
// success, 1 after a domain error (message on `err`), 2 after a usage error
// (message and synopsis on `err`).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Sets `dotted` ("training.learning_rate") in `config` to `value`, parsed
// as JSON when it is valid JSON and kept as a string otherwise. Throws
// InvalidConfig when an intermediate key holds a non-object.
void apply_override(nlohmann::json& config, const std::string& dotted, const std::string& value);

}  // namespace mrl::cli
