#pragma once

// Linearized equation {F, N} + N_hat = R for N = e + <omega, I>.

#include <span>

#include "kam/series.hpp"
#include "kam/smalldiv.hpp"

namespace kam {

struct HomologicalSolution {
  Series F;      // zero mean, affine in I
  Series N_hat;  // k = 0 part of R
  double min_divisor = 0.0;  // +inf when F has no modes
  double used_threshold = 0.0;
};

/// F_k = R_k / (i <k, omega>), N_hat = [R]. Modes with
/// |<k,omega>| < divisor_factor * alpha / |k|^tau raise SmallDivisorViolation.
HomologicalSolution solve_homological(const Series& R, std::span<const double> omega,
                                      const DiophantineParams& p, double divisor_factor = 0.5);

/// Majorant of d_omega(F) + N_hat - R on dom.
double verify_residual(const HomologicalSolution& sol, const Series& R, std::span<const double> omega,
                       const DomainSpec& dom = {});

/// c(n, tau) v / (alpha sigma^{tau+n}); requires 0 < sigma < s.
double lemma1_bound(double v_norm_s, double alpha, double tau, int n, double sigma, double s = 1.0);

}  // namespace kam
