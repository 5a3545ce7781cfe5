#include "kam/kamstep.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kam/errors.hpp"

namespace kam {

void StepParams::validate() const {
  if (!(r > 0.0) || !(s > 0.0) || !(h > 0.0)) throw InvalidInput("step needs r, s, h > 0");
  if (!(eta > 0.0 && eta < 0.125)) throw InvalidInput("step needs 0 < eta < 1/8");
  if (!(sigma > 0.0 && sigma < s / 5.0)) throw InvalidInput("step needs 0 < sigma < s/5");
  if (K < 1) throw InvalidInput("step needs K >= 1");
  if (!(alpha > 0.0)) throw InvalidInput("step needs alpha > 0");
  if (!(tau > 0.0)) throw InvalidInput("step needs tau > 0");
}

ConditionChecks check_step_conditions(const StepParams& p, double eps) {
  ConditionChecks c;
  const double nu = p.nu();
  c.a_lhs = eps;
  c.a_rhs = p.c_a * p.alpha * p.eta * p.r * std::pow(p.sigma, nu);
  c.b_lhs = eps;
  c.b_rhs = p.c_b * p.h * p.r;
  c.c_lhs = p.h;
  c.c_rhs = p.alpha / (2.0 * std::pow(static_cast<double>(p.K), nu));
  c.a = c.a_lhs <= c.a_rhs;
  c.b = c.b_lhs <= c.b_rhs;
  c.c = c.c_lhs <= c.c_rhs;
  return c;
}

Truncation truncate_perturbation(const Series& P, const StepParams& p) {
  Truncation t;
  const Split taylor = truncate_taylor(P, 1);
  t.Q = taylor.kept;
  const Split fourier = truncate_fourier(t.Q, static_cast<int>(std::min<std::int64_t>(p.K, 1 << 30)));
  t.R = fourier.kept;
  const double eps = majorant_norm(P, {p.r, p.s, p.h});
  t.report.taylor_tail = majorant_norm(taylor.tail, {2.0 * p.eta * p.r, p.s, p.h});
  t.report.fourier_tail = majorant_norm(fourier.tail, {p.r, p.s - p.sigma, p.h});
  t.report.taylor_ref = p.eta * p.eta * eps;
  t.report.fourier_ref = std::pow(static_cast<double>(p.K), P.dof()) * std::exp(-p.K * p.sigma) * eps;
  return t;
}

namespace {

Series bracket_scaled(const Series& X, const Series& F, double factor, const LieParams& lp,
                      const DomainSpec& w, double& discarded) {
  Truncated b = poisson(X, F, X.degree_cap(), lp.k_cap, w);
  discarded += factor * b.tail_norm;
  Split pr = prune(scale(b.value, factor), w, lp.prune_tol);
  discarded += majorant_norm(pr.tail, w);
  if (pr.kept.size() > lp.max_terms) throw SeriesTooLarge(pr.kept.size());
  return pr.kept;
}

struct ChainOut {
  Series sum;
  int order = 0;
  double tail = 0.0;
  double discarded = 0.0;
};

// sum_{l>=1} ad_F^l X0 / (l + shift)! * shift!, built as term_l = ad term_{l-1} / (l + shift).
ChainOut run_chain(const Series& X0, const Series& F, int shift, const LieParams& lp, const DomainSpec& w) {
  ChainOut out;
  out.sum = Series(X0.dof(), X0.degree_cap(), 0);
  Series term = X0;
  double prev = majorant_norm(X0, w);
  double prev2 = -1.0;
  int growing = 0;
  if (prev == 0.0 || F.empty()) return out;
  for (int l = 1; l <= lp.max_order; ++l) {
    term = bracket_scaled(term, F, 1.0 / (l + shift), lp, w, out.discarded);
    const double nrm = majorant_norm(term, w);
    out.sum = out.sum + term;
    out.order = l;
    if (nrm < lp.tol || term.empty()) {
      const double q = prev > 0.0 ? nrm / prev : 0.0;
      out.tail = q < 1.0 ? nrm * q / (1.0 - q) : nrm;
      return out;
    }
    // terms that keep growing will not turn around in a capped series
    growing = nrm >= prev ? growing + 1 : 0;
    if (l >= 6 && growing >= 3) throw LieDivergence(l, nrm / prev);
    prev2 = prev;
    prev = nrm;
  }
  const double q = prev2 > 0.0 ? prev / prev2 : 1.0;
  if (!(q < 0.5)) throw LieDivergence(lp.max_order, q);
  out.tail = prev * q / (1.0 - q);
  return out;
}

}  // namespace

LieResult lie_transform(const NormalForm& N, const Series& P, const Series& F, const LieParams& lp,
                        const DomainSpec& weight) {
  if (P.dof() != F.dof() || static_cast<int>(N.omega.size()) != P.dof())
    throw DimensionMismatch("lie_transform operands");
  if (F.taylor_degree() > 1) throw NonAffineInput(F.taylor_degree());
  const Series H = Series::from_normal_form(N, std::max(1, P.degree_cap())) + P;
  ChainOut c = run_chain(H, F, 0, lp, weight);
  LieResult out;
  out.value = H + c.sum;
  out.tail_bound = c.tail;
  out.order_used = c.order;
  out.discarded_norm = c.discarded;
  return out;
}

NewError new_error(const Series& P, const Series& R, const Series& N_hat, const Series& F,
                   const StepParams& p, const LieParams& lp, double eps_in) {
  if (F.taylor_degree() > 1) throw NonAffineInput(F.taylor_degree());
  const double s_out = p.s - 5.0 * p.sigma;
  const DomainSpec w{1.0, s_out, p.h};
  ChainOut t = run_chain(P, F, 0, lp, w);
  ChainOut u = run_chain(N_hat - R, F, 1, lp, w);
  NewError out;
  out.P_plus = (P - R) + t.sum + u.sum;
  auto& rep = out.report;
  rep.eps_out = majorant_norm(out.P_plus, {p.eta * p.r, s_out, p.h});
  const double nu = p.nu();
  rep.quadratic_ref = eps_in * eps_in / (p.alpha * p.r * std::pow(p.sigma, nu)) +
                      (p.eta * p.eta + std::pow(static_cast<double>(p.K), P.dof()) * std::exp(-p.K * p.sigma)) *
                          eps_in;
  rep.tail_bound = t.tail + u.tail;
  rep.order_used = std::max(t.order, u.order);
  rep.discarded_norm = t.discarded + u.discarded;
  return out;
}

StepResult apply_step(const NormalForm& N, const Series& P, const StepParams& p, const LieParams& lp,
                      bool force) {
  p.validate();
  const int n = P.dof();
  if (static_cast<int>(N.omega.size()) != n) throw DimensionMismatch("normal form vs perturbation dof");
  StepResult out;
  auto& rep = out.report;
  rep.forced = force;
  rep.eps_in = majorant_norm(P, {p.r, p.s, p.h});
  rep.E_in = rep.eps_in / (p.alpha * p.r * std::pow(p.sigma, p.nu()));
  rep.conditions = check_step_conditions(p, rep.eps_in);
  if (!rep.conditions.ok() && !force) {
    std::ostringstream msg;
    msg << "step conditions failed:";
    if (!rep.conditions.a) msg << " (a) " << rep.conditions.a_lhs << " > " << rep.conditions.a_rhs;
    if (!rep.conditions.b) msg << " (b) " << rep.conditions.b_lhs << " > " << rep.conditions.b_rhs;
    if (!rep.conditions.c) msg << " (c) " << rep.conditions.c_lhs << " > " << rep.conditions.c_rhs;
    throw ConditionViolation(msg.str());
  }
  out.record.v.assign(n, 0.0);
  out.record.F = Series(n, 1, 0);
  if (P.empty()) {
    out.N_plus = N;
    out.P_plus = P;
    out.R = P;
    rep.identity = true;
    rep.min_divisor = 0.0;
    return out;
  }

  Truncation tr = truncate_perturbation(P, p);
  rep.truncation = tr.report;
  HomologicalSolution sol = solve_homological(tr.R, N.omega, {p.alpha, p.tau}, lp.divisor_factor);
  rep.min_divisor = sol.min_divisor;
  rep.used_threshold = sol.used_threshold;

  NewError ne = new_error(P, tr.R, sol.N_hat, sol.F, p, lp, rep.eps_in);
  rep.new_error = ne.report;
  rep.eps_out = ne.report.eps_out;
  rep.E_out = rep.eps_out / (p.alpha * p.eta * p.r * std::pow(0.5 * p.sigma, p.nu()));

  std::vector<int> z(n, 0), m(n, 0);
  out.N_plus.e = N.e + sol.N_hat.coeff(z, z).real();
  out.N_plus.omega = N.omega;
  for (int j = 0; j < n; ++j) {
    m.assign(n, 0);
    m[j] = 1;
    out.record.v[j] = sol.N_hat.coeff(m, z).real();
    out.N_plus.omega[j] += out.record.v[j];
  }
  out.record.F = sol.F;
  out.record.lie_order_used = ne.report.order_used;
  out.record.discarded_norm = ne.report.discarded_norm;
  out.P_plus = std::move(ne.P_plus);
  out.R = std::move(tr.R);
  return out;
}

nlohmann::json to_json(const StepReport& r) {
  using nlohmann::json;
  const auto& c = r.conditions;
  json cond = {{"a", {{"ok", c.a}, {"lhs", c.a_lhs}, {"rhs", c.a_rhs}}},
               {"b", {{"ok", c.b}, {"lhs", c.b_lhs}, {"rhs", c.b_rhs}}},
               {"c", {{"ok", c.c}, {"lhs", c.c_lhs}, {"rhs", c.c_rhs}}}};
  return {{"eps_in", r.eps_in},
          {"eps_out", r.eps_out},
          {"E_in", r.E_in},
          {"E_out", r.E_out},
          {"conditions", cond},
          {"forced", r.forced},
          {"identity", r.identity},
          {"min_divisor", std::isfinite(r.min_divisor) ? json(r.min_divisor) : json(nullptr)},
          {"used_threshold", r.used_threshold},
          {"truncation",
           {{"taylor_tail", r.truncation.taylor_tail},
            {"fourier_tail", r.truncation.fourier_tail},
            {"taylor_ref", r.truncation.taylor_ref},
            {"fourier_ref", r.truncation.fourier_ref}}},
          {"new_error",
           {{"quadratic_ref", r.new_error.quadratic_ref},
            {"tail_bound", r.new_error.tail_bound},
            {"lie_order", r.new_error.order_used},
            {"discarded_norm", r.new_error.discarded_norm}}}};
}

nlohmann::json to_json(const TransformRecord& r) {
  return {{"F", to_json(r.F)},
          {"v", r.v},
          {"lie_order_used", r.lie_order_used},
          {"discarded_norm", r.discarded_norm}};
}

}  // namespace kam
