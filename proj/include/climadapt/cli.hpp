#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace climadapt {

// Exit codes: 0 success, 1 invalid input (flags, config, data), 2 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitRuntime = 2;

// Runs one command; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Accepts "3", "0-9" and "1,4,7-9".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace climadapt
