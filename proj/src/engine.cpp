#include "kam/engine.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "kam/analysis.hpp"
#include "kam/errors.hpp"

namespace kam {

namespace {

int default_grid(int n) {
  switch (n) {
    case 1:
    case 2: return 64;
    case 3: return 24;
    default: return 12;
  }
}

std::string fmt(double x) {
  std::ostringstream o;
  o.precision(6);
  o << x;
  return o.str();
}

}  // namespace

TorusResult iterate(const NormalForm& N0, const Series& P0, const Schedule& sched, const RunConfig& cfg) {
  const int n = P0.dof();
  if (static_cast<int>(N0.omega.size()) != n) throw DimensionMismatch("normal form vs perturbation dof");
  if (sched.params.n != n) throw DimensionMismatch("schedule dof vs perturbation dof");
  if (cfg.max_iters < 1) throw InvalidInput("max_iters must be >= 1");
  const double alpha = sched.params.alpha;
  const double nu = sched.params.tau + 1.0;

  TorusResult res;
  res.n = n;
  res.forced = cfg.force;
  res.omega_tilde = N0.omega;

  const double eps0 = majorant_norm(P0, {sched.r[0], sched.s[0], sched.h[0]});
  if (eps0 > sched.eps(0)) {
    const std::string what = "|P0| = " + fmt(eps0) + " exceeds eps0 = alpha E0 r0 sigma0^nu = " + fmt(sched.eps(0));
    if (!cfg.force) throw PreconditionFail(what);
    res.notes.push_back("forced past precondition: " + what);
  }

  NormalForm N = N0;
  Series P = P0;
  const int max_steps = std::min(cfg.max_iters, sched.size() - 1);
  for (int j = 0;; ++j) {
    IterateRecord rec;
    rec.j = j;
    const Series Q = truncate_taylor(P, 1).kept;
    rec.residual = majorant_norm(Q - mean(Q), {1.0, sched.s[j], sched.h[j]});
    rec.eps = majorant_norm(P, {sched.r[j], sched.s[j], sched.h[j]});
    rec.E = rec.eps / (alpha * sched.r[j] * std::pow(sched.sigma[j], nu));
    res.history.push_back(rec);
    if (rec.residual < cfg.residual_stop || rec.E < cfg.E_floor) {
      res.converged = true;
      break;
    }
    const auto& h = res.history;
    if (h.size() >= 3 && h[h.size() - 1].residual >= h[h.size() - 2].residual &&
        h[h.size() - 2].residual >= h[h.size() - 3].residual)
      throw NoConvergence(j, "residual stalled at " + fmt(rec.residual));
    if (j >= max_steps) throw NoConvergence(j, "step budget used up with residual " + fmt(rec.residual));

    StepResult st;
    try {
      st = apply_step(N, P, sched.step(j), cfg.lie, cfg.force);
    } catch (const Error& e) {
      throw Error(e.code(), "iterate " + std::to_string(j) + ": " + e.what());
    }
    if (!st.report.conditions.ok())
      res.notes.push_back("step " + std::to_string(j) + " ran with failed conditions (forced)");
    res.steps.push_back(st.report);
    res.records.push_back(std::move(st.record));
    N = std::move(st.N_plus);
    P = std::move(st.P_plus);
  }

  res.N_final = N;
  res.omega_final = N.omega;
  res.shift.resize(n);
  for (int j = 0; j < n; ++j) res.shift[j] = res.omega_final[j] - res.omega_tilde[j];
  res.P_final = P;
  if (cfg.embed) {
    const int grid = cfg.grid > 0 ? cfg.grid : default_grid(n);
    res.embedding = embed_torus(res.records, n, grid, cfg.integrator);
    res.lagrangian_defect = lagrangian_defect(*res.embedding);
    res.residual = conjugacy_residual(*res.embedding, series_hamiltonian(N0, P0), res.omega_final);
  }
  return res;
}

HamiltonianFn series_hamiltonian(const NormalForm& N, const Series& P) {
  auto compiled = std::make_shared<CompiledSeries>(Series::from_normal_form(N, std::max(1, P.degree_cap())) + P);
  return [compiled](std::span<const double> I, std::span<const double> theta) {
    return compiled->eval1(I, theta);
  };
}

double conjugacy_residual(const Embedding& emb, const HamiltonianFn& H, std::span<const double> omega) {
  const int n = emb.n, N = emb.N;
  if (static_cast<int>(omega.size()) != n) throw DimensionMismatch("omega vs embedding dof");
  std::vector<std::vector<double>> U(n), Voff(n), DU(n), DV(n);
  for (int j = 0; j < n; ++j) {
    U[j] = fft_inverse_real(emb.U[j], n, N);
    Voff[j] = fft_inverse_real(emb.V_off[j], n, N);
    DU[j] = spectral_derivative(emb.U[j], n, N, omega);
    DV[j] = spectral_derivative(emb.V_off[j], n, N, omega);
  }
  const double hstep = 1e-3;
  const double w1 = 8.0 / (12.0 * hstep), w2 = 1.0 / (12.0 * hstep);
  std::vector<double> I(n), th(n);
  double theta[kMaxDof];
  double worst = 0.0;
  auto partial = [&](std::vector<double>& x, int j) {
    const double x0 = x[j];
    x[j] = x0 + hstep;
    const double p1 = H(I, th);
    x[j] = x0 - hstep;
    const double m1 = H(I, th);
    x[j] = x0 + 2.0 * hstep;
    const double p2 = H(I, th);
    x[j] = x0 - 2.0 * hstep;
    const double m2 = H(I, th);
    x[j] = x0;
    return w1 * (p1 - m1) - w2 * (p2 - m2);
  };
  const std::size_t total = U[0].size();
  for (std::size_t g = 0; g < total; ++g) {
    grid_point(g, n, N, theta);
    for (int j = 0; j < n; ++j) {
      I[j] = U[j][g];
      th[j] = theta[j] + Voff[j][g];
    }
    for (int j = 0; j < n; ++j) {
      const double Idot = -partial(th, j);
      const double thdot = partial(I, j);
      worst = std::max(worst, std::abs(Idot - DU[j][g]));
      worst = std::max(worst, std::abs(thdot - (omega[j] + DV[j][g])));
    }
  }
  return worst;
}

double lagrangian_defect(const Embedding& emb) {
  const int n = emb.n, N = emb.N;
  // dU[j][a] = d_a U_j, dV[j][a] = d_a (V_j - theta_j)
  std::vector<std::vector<std::vector<double>>> dU(n), dV(n);
  for (int j = 0; j < n; ++j) {
    for (int a = 0; a < n; ++a) {
      std::vector<double> e(n, 0.0);
      e[a] = 1.0;
      dU[j].push_back(spectral_derivative(emb.U[j], n, N, e));
      dV[j].push_back(spectral_derivative(emb.V_off[j], n, N, e));
    }
  }
  double worst = 0.0;
  const std::size_t total = n > 0 ? dU[0][0].size() : 0;
  for (std::size_t g = 0; g < total; ++g)
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        double w = 0.0;
        for (int j = 0; j < n; ++j) {
          const double Vja = (a == j ? 1.0 : 0.0) + dV[j][a][g];
          const double Vjb = (b == j ? 1.0 : 0.0) + dV[j][b][g];
          w += dU[j][a][g] * Vjb - dU[j][b][g] * Vja;
        }
        worst = std::max(worst, std::abs(w));
      }
  return worst;
}

FrequencyMatch frequency_match(const ProblemFamily& family, std::span<const double> omega_star,
                               const RunConfig& cfg, const MatchOptions& mo) {
  RunConfig inner = cfg;
  inner.embed = false;
  const VectorMap G = [&](std::span<const double> w) {
    const RunSetup su = family(w);
    return iterate(su.N0, su.P0, su.schedule, inner).omega_final;
  };
  NewtonOptions no;
  no.max_iter = mo.max_outer;
  no.tol = mo.tol;
  no.fd_step = mo.fd_step;
  FrequencyMatch out;
  out.omega_star.assign(omega_star.begin(), omega_star.end());
  NewtonResult nr;
  try {
    nr = newton_solve(G, omega_star, omega_star, no);
  } catch (const NewtonFail& e) {
    throw OuterNoConvergence(std::string("frequency match: ") + e.what());
  }
  out.omega_param = nr.x;
  out.outer_iterations = nr.iterations;
  const RunSetup su = family(nr.x);
  out.result = iterate(su.N0, su.P0, su.schedule, cfg);
  out.mismatch = 0.0;
  for (std::size_t j = 0; j < omega_star.size(); ++j)
    out.mismatch = std::max(out.mismatch, std::abs(out.result.omega_final[j] - omega_star[j]));
  return out;
}

nlohmann::json TorusResult::to_json(bool include_series) const {
  using nlohmann::json;
  json hist = json::array();
  for (const auto& h : history)
    hist.push_back({{"j", h.j}, {"eps", h.eps}, {"E", h.E}, {"residual", h.residual}});
  json steps_j = json::array();
  for (const auto& s : steps) steps_j.push_back(kam::to_json(s));
  json recs = json::array();
  for (const auto& r : records) {
    json e = {{"v", r.v}, {"lie_order_used", r.lie_order_used}, {"discarded_norm", r.discarded_norm}};
    if (include_series) e["F"] = kam::to_json(r.F);
    recs.push_back(e);
  }
  json out = {{"n", n},
              {"converged", converged},
              {"forced", forced},
              {"notes", notes},
              {"omega_final", omega_final},
              {"omega_tilde", omega_tilde},
              {"shift", shift},
              {"e_final", N_final.e},
              {"iterations", static_cast<int>(records.size())},
              {"history", hist},
              {"steps", steps_j},
              {"records", recs},
              {"residual", residual >= 0.0 ? json(residual) : json(nullptr)},
              {"lagrangian_defect", lagrangian_defect >= 0.0 ? json(lagrangian_defect) : json(nullptr)}};
  if (embedding) out["embedding"] = embedding->to_json(1e-15);
  if (include_series) out["P_final"] = kam::to_json(P_final);
  return out;
}

}  // namespace kam
