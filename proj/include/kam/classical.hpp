#pragma once

// H(p, q) = h(p) + eps f(p, q) near the torus p = p0 with h_p(p0) = omega,
// rewritten as N + P in shifted actions I = p - p0.

#include <span>
#include <vector>

#include "kam/engine.hpp"
#include "kam/smalldiv.hpp"

namespace kam {

struct Monomial {
  std::vector<int> m;
  double c = 0.0;
};

class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(int n, std::vector<Monomial> terms);
  /// 1/2 <A p, p> with A row-major n x n (symmetrized).
  static Polynomial quadratic(int n, std::span<const double> A);

  int dof() const { return n_; }
  int degree() const;
  const std::vector<Monomial>& terms() const { return terms_; }

  double value(std::span<const double> p) const;
  void gradient(std::span<const double> p, double* g) const;
  void hessian(std::span<const double> p, double* H) const;
  /// Coefficients of I -> poly(p0 + I), merged by exponent and sorted.
  std::vector<Monomial> shifted(std::span<const double> p0) const;

 private:
  int n_ = 0;
  std::vector<Monomial> terms_;
};

/// a p^m cos<k,q> + b p^m sin<k,q>
struct FourierTerm {
  std::vector<int> m;
  std::vector<int> k;
  double a = 0.0;
  double b = 0.0;
};

struct ClassicalProblem {
  int n = 2;
  Polynomial h;
  std::vector<FourierTerm> f;
  double epsilon = 0.0;
  FrequencyBox domain;  // box of actions p
  double M = 0.0;       // Hessian bound of h on the domain
  double F_bound = 0.0; // sup |f| on domain x torus

  double f_value(std::span<const double> p, std::span<const double> q) const;
  int f_degree() const;
};

/// Validates the problem, checks det h_pp != 0 at sample points and fills
/// M and F_bound when they are not positive already.
ClassicalProblem make_classical(int n, Polynomial h, std::vector<FourierTerm> f, double epsilon,
                                FrequencyBox domain, double M = 0.0, double F_bound = 0.0);

struct ExpansionOptions {
  int d_max = 2;
  int grid = 32;         // angle samples per dimension
  int K = 15;            // Fourier cutoff of the expansion
  double chop = 1e-15;   // relative to the largest coefficient
  double alias_tol = 1e-11;
};

struct ClassicalSetup {
  NormalForm N0;
  Series P0;
  std::vector<double> p0;
  double r_auto = 1.0;
  double frequency_error = 0.0;  // |h_p(p0) - omega|
  double taylor_dropped = 0.0;   // majorant of dropped h-terms at r_auto
  double expansion_residual = 0.0;
};

ClassicalSetup setup_classical(const ClassicalProblem& prob, std::span<const double> omega,
                               const ExpansionOptions& opt = {});

/// gamma^2 alpha^2 s^{2 nu} / (4 F M)
double epsilon_threshold(const ClassicalProblem& prob, double alpha, double s, double nu, double gamma);

/// H(I, theta) = h(p0 + I) + eps f(p0 + I, theta), evaluated from the problem data.
HamiltonianFn classical_hamiltonian(const ClassicalProblem& prob, std::span<const double> p0);

}  // namespace kam
