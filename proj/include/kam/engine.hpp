#pragma once

// Parameter schedule, the iteration loop, diagnostics on the embedded torus,
// and the outer frequency solve.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kam/flow.hpp"
#include "kam/kamstep.hpp"

namespace kam {

struct ScheduleParams {
  int n = 2;
  double s0 = 1.0;
  double r0 = 1.0;
  double alpha = 0.0;
  double tau = 1.0;
  double E0 = 0.01;
  std::int64_t K0 = 100;
  double c = 1.0;
  double c0 = 0.05;
  double c_a = 1.0;
  double c_b = 20.0;
  int iters = 10;
};

struct Schedule {
  ScheduleParams params;
  double kappa = 1.5;
  std::vector<double> sigma, h, E, r, s, eta;
  std::vector<std::int64_t> K;

  int size() const { return static_cast<int>(sigma.size()); }
  StepParams step(int j) const;
  /// eps_j = alpha E_j r_j sigma_j^nu
  double eps(int j) const;
};

/// sigma_0 = s0/20, sigma_{j+1} = sigma_j/2, K_{j+1} = 4 K_j, h_0 = alpha c0 E0 sigma_0^nu,
/// h_{j+1} = h_j/4^nu, E_{j+1} = c^{kappa-1} E_j^kappa, eta_j = sqrt(E_j),
/// r_{j+1} = eta_j r_j, s_{j+1} = s_j - 5 sigma_j. Entries j = 0..iters.
/// Throws ScheduleInfeasible naming the first violated inequality.
Schedule build_schedule(const ScheduleParams& sp);

struct RunConfig {
  int max_iters = 10;
  double residual_stop = 1e-12;
  double E_floor = 1e-14;
  LieParams lie;
  bool force = false;
  bool embed = true;
  int grid = 0;  // 0: 64 for n <= 2, 24 for n = 3, 12 for n = 4
  IntegratorOptions integrator;
};

struct IterateRecord {
  int j = 0;
  double eps = 0.0;       // |P_j| at (r_j, s_j)
  double E = 0.0;         // eps_j / (alpha r_j sigma_j^nu)
  double residual = 0.0;  // |Q_j - [Q_j]| at (1, s_j), Q_j the affine part of P_j
};

struct TorusResult {
  int n = 0;
  bool converged = false;
  bool forced = false;
  std::vector<std::string> notes;
  NormalForm N_final;
  std::vector<double> omega_final;
  std::vector<double> omega_tilde;  // parameter the run started from
  std::vector<double> shift;        // omega_final - omega_tilde
  std::vector<IterateRecord> history;
  std::vector<StepReport> steps;
  std::vector<TransformRecord> records;
  std::optional<Embedding> embedding;
  Series P_final;
  double residual = -1.0;           // conjugacy oracle, -1 when not evaluated
  double lagrangian_defect = -1.0;

  nlohmann::json to_json(bool include_series = false) const;
};

TorusResult iterate(const NormalForm& N0, const Series& P0, const Schedule& sched, const RunConfig& cfg);

using HamiltonianFn = std::function<double(std::span<const double> I, std::span<const double> theta)>;

/// sup over the grid of |X_H(Phi(theta)) - DPhi(theta) omega|, with X_H from
/// fourth-order central differences of H (step 1e-3).
double conjugacy_residual(const Embedding& emb, const HamiltonianFn& H, std::span<const double> omega);

/// sup of the pulled-back form sum_j dU_j ^ dV_j over the grid.
double lagrangian_defect(const Embedding& emb);

/// H = N + P evaluated from the series by direct summation.
HamiltonianFn series_hamiltonian(const NormalForm& N, const Series& P);

/// What one parameter value of a family turns into.
struct RunSetup {
  NormalForm N0;
  Series P0;
  Schedule schedule;
};

using ProblemFamily = std::function<RunSetup(std::span<const double> omega)>;

struct MatchOptions {
  int max_outer = 12;
  double tol = 1e-10;
  double fd_step = 1e-5;
};

struct FrequencyMatch {
  std::vector<double> omega_param;  // parameter with final frequency omega_star
  std::vector<double> omega_star;
  int outer_iterations = 0;
  double mismatch = 0.0;
  TorusResult result;
};

/// Outer Newton on the parameter so that the iteration's final frequency is
/// omega_star. Throws OuterNoConvergence.
FrequencyMatch frequency_match(const ProblemFamily& family, std::span<const double> omega_star,
                               const RunConfig& cfg, const MatchOptions& mo = {});

}  // namespace kam
