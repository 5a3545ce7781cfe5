#pragma once

// Problem files: a perturbation given directly as a series, or a classical
// Hamiltonian h(p) + eps f(p, q) to be expanded around the torus.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kam/classical.hpp"
#include "kam/engine.hpp"

namespace kam {

struct SweepSpec {
  std::vector<double> alphas;
  std::vector<double> eps_grid;  // ascending
  double gamma = 1.0;
};

struct Problem {
  std::string kind;  // "series" or "classical"
  int n = 2;
  std::vector<double> omega_star;
  double alpha = 0.0;
  double tau = 1.0;
  int K_max = 500;  // for frequency checks

  // kind == "series"
  NormalForm N0;
  Series P0;

  // kind == "classical"
  std::optional<ClassicalProblem> classical;
  ExpansionOptions expansion;
  bool match_frequency = true;

  ScheduleParams schedule;
  bool r0_given = false;  // classical runs default r0 to r_auto
  RunConfig run;
  MatchOptions match;
  SweepSpec sweep;
};

/// Parses a problem file. Unknown or missing fields raise InvalidInput naming the field.
Problem parse_problem(const nlohmann::json& j);

/// Applies "a.b=value" to the raw JSON before parsing. Only keys listed by
/// override_keys() are accepted.
void apply_override(nlohmann::json& j, const std::string& assignment);
const std::vector<std::string>& override_keys();

/// N0, P0 and schedule for one parameter value (the problem's own omega for series problems).
RunSetup make_setup(const Problem& p, std::span<const double> omega);
ProblemFamily make_family(const Problem& p);

/// Runs iterate, with the outer frequency solve for classical problems that ask for it.
struct RunOutcome {
  TorusResult result;
  std::optional<FrequencyMatch> match;
  std::vector<double> p0;   // classical torus location
  double oracle_residual = -1.0;  // conjugacy residual against the original Hamiltonian
};
RunOutcome run_problem(const Problem& p);

}  // namespace kam
