#include "kam/homological.hpp"

#include <cmath>
#include <limits>

#include "kam/analysis.hpp"
#include "kam/errors.hpp"

namespace kam {

SmallDivisorViolation::SmallDivisorViolation(std::vector<int> k, double value, double threshold)
    : Error("small_divisor", [&] {
        std::string s = "divisor |<k,omega>| = " + std::to_string(value) + " below threshold " +
                        std::to_string(threshold) + " at k = (";
        for (std::size_t j = 0; j < k.size(); ++j) s += (j ? ", " : "") + std::to_string(k[j]);
        return s + ")";
      }()),
      k_(std::move(k)),
      value_(value),
      threshold_(threshold) {}

HomologicalSolution solve_homological(const Series& R, std::span<const double> omega,
                                      const DiophantineParams& p, double divisor_factor) {
  const int n = R.dof();
  if (static_cast<int>(omega.size()) != n) throw DimensionMismatch("omega length vs series dof");
  if (!(divisor_factor > 0.0 && divisor_factor <= 1.0))
    throw InvalidInput("divisor_factor must lie in (0, 1]");
  const int deg = R.taylor_degree();
  if (deg > 1) throw NonAffineInput(deg);

  Series::Builder F(n, R.degree_cap(), R.fourier_cap());
  Series::Builder Nh(n, R.degree_cap(), 0);
  HomologicalSolution sol;
  sol.min_divisor = std::numeric_limits<double>::infinity();
  int m[kMaxDof], k[kMaxDof];
  int kmax = 1;
  for (const auto& t : R.terms()) {
    Series::unpack(n, t.key, m, k);
    if (!Series::canonical(n, k)) continue;
    int k1 = 0;
    double kw = 0.0;
    for (int j = 0; j < n; ++j) {
      k1 += std::abs(k[j]);
      kw += k[j] * omega[j];
    }
    if (k1 == 0) {
      Nh.add_key(t.key, t.c);
      continue;
    }
    kmax = std::max(kmax, k1);
    const double div = std::abs(kw);
    const double thr = divisor_factor * p.alpha / std::pow(static_cast<double>(k1), p.tau);
    if (div < thr || div == 0.0) throw SmallDivisorViolation(std::vector<int>(k, k + n), div, thr);
    sol.min_divisor = std::min(sol.min_divisor, div);
    F.add_key(t.key, t.c / Complex(0.0, kw));
  }
  sol.F = F.finish();
  sol.N_hat = Nh.finish();
  sol.used_threshold = divisor_factor * p.alpha / std::pow(static_cast<double>(kmax), p.tau);
  return sol;
}

double verify_residual(const HomologicalSolution& sol, const Series& R, std::span<const double> omega,
                       const DomainSpec& dom) {
  return majorant_norm(d_omega(sol.F, omega) + sol.N_hat - R, dom);
}

double lemma1_bound(double v_norm_s, double alpha, double tau, int n, double sigma, double s) {
  if (!(sigma > 0.0) || !(sigma < s)) throw InvalidInput("solver bound needs 0 < sigma < s");
  if (!(alpha > 0.0)) throw InvalidInput("solver bound needs alpha > 0");
  return lemma1_constant(n, tau) * v_norm_s / (alpha * std::pow(sigma, tau + n));
}

}  // namespace kam
