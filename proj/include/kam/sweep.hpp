#pragma once

// Largest perturbation size that still converges, as a function of alpha.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kam/problem.hpp"

namespace kam {

struct SweepCell {
  double alpha = 0.0;
  std::vector<double> omega;
  double eps_max = 0.0;     // 0 when every grid value failed
  double threshold = 0.0;   // epsilon_threshold at gamma
  int runs = 0;
  std::string last_failure;  // error code of the smallest failing eps, if any
};

struct SweepTable {
  std::vector<SweepCell> cells;
  std::optional<double> slope;  // least squares of log eps_max on log alpha
  bool monotone = true;         // eps_max nondecreasing in alpha

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// For each alpha the problem frequency is rescaled to (alpha / alpha_fix) omega_star and
/// the eps grid is bisected for the largest converging value. Runs are forced, without
/// embedding. Cells run concurrently; the table is in input order.
SweepTable sweep(const Problem& prob, const SweepSpec& spec);

/// Slope of the least-squares line through (log x, log y), over pairs with both positive.
std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace kam
