#include <cmath>
#include <limits>

#include "kam/engine.hpp"
#include "kam/errors.hpp"

namespace kam {

StepParams Schedule::step(int j) const {
  if (j < 0 || j >= size()) throw InvalidInput("schedule index out of range");
  StepParams p;
  p.r = r[j];
  p.s = s[j];
  p.h = h[j];
  p.sigma = sigma[j];
  p.eta = eta[j];
  p.K = K[j];
  p.alpha = params.alpha;
  p.tau = params.tau;
  p.c_a = params.c_a;
  p.c_b = params.c_b;
  return p;
}

double Schedule::eps(int j) const {
  return params.alpha * E[j] * r[j] * std::pow(sigma[j], params.tau + 1.0);
}

Schedule build_schedule(const ScheduleParams& sp) {
  if (!(sp.s0 > 0.0) || !(sp.r0 > 0.0)) throw InvalidInput("schedule needs s0, r0 > 0");
  if (!(sp.alpha > 0.0)) throw InvalidInput("schedule needs alpha > 0");
  if (!(sp.tau > sp.n - 1)) throw InvalidInput("schedule needs tau > n - 1");
  if (!(sp.E0 > 0.0) || !(sp.c > 0.0) || !(sp.c0 > 0.0)) throw InvalidInput("schedule needs E0, c, c0 > 0");
  if (sp.K0 < 1) throw InvalidInput("schedule needs K0 >= 1");
  if (sp.iters < 1 || sp.iters > 12) throw InvalidInput("schedule length must be in [1, 12]");
  Schedule sc;
  sc.params = sp;
  const double nu = sp.tau + 1.0;
  if (!(sp.E0 < 1.0 / sp.c)) throw ScheduleInfeasible("E0 < 1/c", 0);

  double sigma = sp.s0 / 20.0, s = sp.s0, r = sp.r0, E = sp.E0;
  double h = sp.alpha * sp.c0 * sp.E0 * std::pow(sigma, nu);
  std::int64_t K = sp.K0;
  double prev_log_lhs = 0.0;
  for (int j = 0; j <= sp.iters; ++j) {
    // eta < 1/8 is a step precondition, checked when the step runs
    const double eta = std::sqrt(E);
    const double x = static_cast<double>(K) * sigma;
    const double log_lhs = nu * std::log(x) - x;  // log of (K sigma)^nu e^{-K sigma}
    const double log_rhs = std::log(E) + nu * std::log(sigma);
    if (!(log_lhs <= log_rhs)) throw ScheduleInfeasible("(8) (K sigma)^nu e^{-K sigma} <= E sigma^nu", j);
    if (!(h <= sp.alpha / (2.0 * std::pow(static_cast<double>(K), nu))))
      throw ScheduleInfeasible("(c) h <= alpha/(2 K^nu)", j);
    if (j > 0 && !(log_lhs <= sc.kappa * prev_log_lhs))
      throw ScheduleInfeasible("decay of (K sigma)^nu e^{-K sigma} at rate kappa", j);
    prev_log_lhs = log_lhs;

    sc.sigma.push_back(sigma);
    sc.h.push_back(h);
    sc.E.push_back(E);
    sc.r.push_back(r);
    sc.s.push_back(s);
    sc.eta.push_back(eta);
    sc.K.push_back(K);

    s = s - 5.0 * sigma;
    sigma *= 0.5;
    if (K > std::numeric_limits<std::int64_t>::max() / 4) throw ScheduleInfeasible("K_j overflow", j);
    K *= 4;
    h /= std::pow(4.0, nu);
    r *= eta;
    E = std::pow(sp.c, sc.kappa - 1.0) * std::pow(E, sc.kappa);
  }
  return sc;
}

}  // namespace kam
