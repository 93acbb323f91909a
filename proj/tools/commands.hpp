#pragma once

#include <stdexcept>
#include <string>

#include "CLI11.hpp"

namespace dstat::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kScenarioFailed = 1;
inline constexpr int kValidation = 2;
inline constexpr int kUnexpectedVerdict = 3;

// Raised by handlers to leave with a specific exit code.
struct Exit : std::runtime_error {
  int code;
  Exit(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

void register_commands(CLI::App& app, int& result);

}  // namespace dstat::cli
