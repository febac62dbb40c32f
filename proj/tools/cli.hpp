#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "bfly/kernels.hpp"

namespace bfly::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2 };

/// Parses argv and runs one subcommand. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct VerifyConfig {
  int width = 8;
  int topics = 19;
  std::uint64_t seed = 42;
  Precision precision = Precision::double_precision;
  int trials = 100;            // random product matrices for the table checks
  int search_instances = 10000;
};

struct CheckResult {
  std::string name;
  bool passed = true;
  std::uint64_t compared = 0;
  std::uint64_t failures = 0;
  double max_rel_error = 0.0;
  std::string note;
};

std::vector<CheckResult> run_verification(const VerifyConfig& config);

/// Human-readable picture of the table rows for (W, K).
std::string table_shape(int width, int topics);

}  // namespace bfly::cli
