#pragma once

// One KAM step: truncate, solve the linearized equation, transform by the
// time-1 map of F, collect the new error and shift the frequency.

#include <cstdint>
#include <string>
#include <vector>

#include "kam/homological.hpp"
#include "kam/series.hpp"

namespace kam {

struct StepParams {
  double r = 1.0;
  double s = 1.0;
  double h = 1.0;
  double sigma = 0.05;
  double eta = 0.1;
  std::int64_t K = 10;
  double alpha = 0.0;
  double tau = 1.0;
  double c_a = 1.0;
  double c_b = 1.0;

  double nu() const { return tau + 1.0; }
  void validate() const;
};

/// Truncation caps and tolerances of the Lie-series evaluation.
struct LieParams {
  int max_order = 40;
  double tol = 1e-24;          // stop when a term's majorant drops below this
  double prune_tol = 1e-24;    // coefficients below this (weighted) are dropped
  int k_cap = 96;              // Fourier storage cap for transformed series
  std::size_t max_terms = 400000;
  double divisor_factor = 0.5;
};

struct ConditionChecks {
  bool a = true, b = true, c = true;
  double a_lhs = 0, a_rhs = 0, b_lhs = 0, b_rhs = 0, c_lhs = 0, c_rhs = 0;
  bool ok() const { return a && b && c; }
};

/// (a) eps <= c_a alpha eta r sigma^nu, (b) eps <= c_b h r, (c) h <= alpha / (2 K^nu).
ConditionChecks check_step_conditions(const StepParams& p, double eps);

struct TruncationReport {
  double taylor_tail = 0.0;   // |P - Q| at (2 eta r, s)
  double fourier_tail = 0.0;  // |Q - R| at (r, s - sigma)
  double taylor_ref = 0.0;    // eta^2 eps
  double fourier_ref = 0.0;   // K^n e^{-K sigma} eps
};

struct Truncation {
  Series Q;
  Series R;
  TruncationReport report;
};

Truncation truncate_perturbation(const Series& P, const StepParams& p);

struct LieResult {
  Series value;
  double tail_bound = 0.0;
  int order_used = 0;
  double discarded_norm = 0.0;  // pruned and capped mass, majorant on the weight domain
};

/// H o X_F^1 = sum_l ad_F^l H / l!, ad_F X = {X, F}. Norms use `weight`.
LieResult lie_transform(const NormalForm& N, const Series& P, const Series& F, const LieParams& lp,
                        const DomainSpec& weight);

struct NewErrorReport {
  double eps_out = 0.0;        // |P_plus| at (eta r, s - 5 sigma)
  double quadratic_ref = 0.0;  // eps^2/(alpha r sigma^nu) + (eta^2 + K^n e^{-K sigma}) eps
  double tail_bound = 0.0;
  int order_used = 0;
  double discarded_norm = 0.0;
};

struct NewError {
  Series P_plus;
  NewErrorReport report;
};

/// P_+ = (P - R) + sum_{l>=1} [ad_F^l P / l! + ad_F^l (N_hat - R) / (l+1)!].
NewError new_error(const Series& P, const Series& R, const Series& N_hat, const Series& F,
                   const StepParams& p, const LieParams& lp, double eps_in);

struct TransformRecord {
  Series F;
  std::vector<double> v;
  int lie_order_used = 0;
  double discarded_norm = 0.0;
};

struct StepReport {
  double eps_in = 0.0;
  double eps_out = 0.0;
  double E_in = 0.0;
  double E_out = 0.0;
  ConditionChecks conditions;
  bool forced = false;
  double min_divisor = 0.0;
  double used_threshold = 0.0;
  TruncationReport truncation;
  NewErrorReport new_error;
  bool identity = false;
};

struct StepResult {
  NormalForm N_plus;
  Series P_plus;
  TransformRecord record;
  StepReport report;
  Series R;  // truncated perturbation, kept for dumps
};

/// Runs the six sub-steps. Without `force`, failed conditions raise
/// ConditionViolation; with it the failure is only recorded.
StepResult apply_step(const NormalForm& N, const Series& P, const StepParams& p, const LieParams& lp = {},
                      bool force = false);

nlohmann::json to_json(const StepReport& r);
nlohmann::json to_json(const TransformRecord& r);

}  // namespace kam
