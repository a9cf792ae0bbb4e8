#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "distsig/error.hpp"

namespace distsig::cli {

enum class Subcommand { Spectrum, Bounds, Train, Analyze, GenSbm };

enum ExitCode : int { kOk = 0, kViolation = 1, kUsage = 2, kIo = 3, kFailure = 4 };

struct Command {
  Subcommand sub = Subcommand::Bounds;

  std::string dataset = "sbm";  // cora | sbm | file
  std::string graph;
  std::string features;
  std::string labels;
  std::string variant = "r";
  double eta = 0.5;
  int epochs = 200;
  std::uint64_t seed = 0;
  int trials = 500;
  int n = 6;
  int m = 3;
  std::string out;
  bool tune = false;
  int jobs = 1;

  std::vector<int> blocks;  // empty: 4 blocks of 50
  double p_in = 0.1;
  double p_out = 0.01;
  bool normalize = true;
  int per_class = -1;  // -1: dataset default
  int val = -1;
  int test = -1;       // -1: dataset default (all remaining outside cora)
};

/// Bad command line; what() is the message, usage() the help text.
class UsageError : public Error {
 public:
  UsageError(const std::string& what, std::string usage)
      : Error(what), usage_(std::move(usage)) {}
  const std::string& usage() const { return usage_; }

 private:
  std::string usage_;
};

/// Parses arguments after the program name. Throws UsageError.
Command parse_args(const std::vector<std::string>& args);

/// Runs the command, writing results to files or `out` and diagnostics to
/// `err`. Returns an ExitCode.
int execute(const Command& cmd, std::ostream& out, std::ostream& err);

/// parse_args + execute with exit-code mapping; prints usage on errors.
int run(int argc, char** argv);

}  // namespace distsig::cli
