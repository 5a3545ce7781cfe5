#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace kam {

struct CliConfig {
  std::string subcommand;
  std::string input;
  std::string output;       // empty: stdout
  std::string table;        // run: convergence CSV path
  std::string format = "json";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int max_iters = -1;       // -1: keep the file value
  double tol = -1.0;        // residual stop, -1: keep the file value
  bool force = false;
  bool dump_F = false;
  std::vector<std::string> overrides;
  // check-freq without an input file
  std::vector<double> omega;
  double alpha = -1.0;
  double tau = -1.0;
  int K_max = 500;
};

/// Exit codes: 0 success, 1 usage or input error, 2 domain failure.
int cmd_run(const CliConfig& c, std::ostream& out, std::ostream& err);
int cmd_check_freq(const CliConfig& c, std::ostream& out, std::ostream& err);
int cmd_measure(const CliConfig& c, std::ostream& out, std::ostream& err);
int cmd_sweep(const CliConfig& c, std::ostream& out, std::ostream& err);
int cmd_step(const CliConfig& c, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace kam
