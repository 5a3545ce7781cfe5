// Acceptance suite: one PASS/FAIL line per criterion. The last criterion reruns
// all the others and requires byte-identical result records.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>

#include "kam/analysis.hpp"
#include "kam/errors.hpp"
#include "kam/flow.hpp"
#include "kam/homological.hpp"
#include "kam/problem.hpp"
#include "kam/smalldiv.hpp"
#include "kam/sweep.hpp"
#include "support.hpp"

using namespace kam;
using namespace kamtest;
using nlohmann::json;

namespace {

enum class Verdict { Pass, Warn, Fail };

struct Outcome {
  Verdict verdict = Verdict::Fail;
  std::string summary;
  json record;  // full-precision results, compared across reruns
  double seconds = 0.0;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Verdict pass_if(bool ok) { return ok ? Verdict::Pass : Verdict::Fail; }

// ---------------------------------------------------------------------------

void division_oracle(const Series& R, const std::vector<double>& w, Series& F) {
  const int n = R.dof();
  Series::Builder b(n, 1, R.fourier_cap());
  for (const auto& m : taylor_indices(n, 1))
    for (const auto& k : fourier_indices(n, R.fourier_cap())) {
      if (!canonical(k)) continue;
      const Complex c = R.coeff(m, k);
      double div = 0.0;
      bool zero = true;
      for (int j = 0; j < n; ++j) {
        div += k[j] * w[j];
        zero = zero && k[j] == 0;
      }
      if (c != 0.0 && !zero) b.add(m, k, c / Complex(0.0, div));
    }
  F = b.finish();
}

Outcome homological_oracle() {
  Rng rng(1001);
  double worst_coeff = 0.0, worst_res = 0.0;
  std::size_t modes = 0;
  bool same_support = true;
  for (int t = 0; t < 100; ++t) {
    const int n = t % 2 ? 3 : 2;
    const int K = 1 + (t / 2) % 10;
    const auto cat = frequency_catalog(n);
    const Series R = random_series(rng, n, 1, K, 0.5, 0.3);
    const auto sol = solve_homological(R, cat.omega, {cat.alpha, cat.tau});
    Series Fo;
    division_oracle(R, cat.omega, Fo);
    same_support = same_support && sol.F.size() == Fo.size();
    for (const auto& term : Fo.terms()) {
      const auto idx = Fo.index(term);
      worst_coeff = std::max(worst_coeff, std::abs(sol.F.coeff(idx.m, idx.k) - term.c) / std::abs(term.c));
      ++modes;
    }
    worst_res = std::max(worst_res, verify_residual(sol, R, cat.omega) / majorant_norm(R, {1.0, 0.0, 1.0}));
  }
  Outcome o;
  o.verdict = pass_if(same_support && worst_coeff <= 1e-12 && worst_res <= 1e-12);
  o.summary = "max relative coefficient error " + fmt("%.2e", worst_coeff) + ", max relative residual " +
              fmt("%.2e", worst_res) + " over " + std::to_string(modes) + " modes";
  o.record = {{"coeff", worst_coeff}, {"residual", worst_res}, {"modes", modes}, {"support", same_support}};
  return o;
}

Outcome solver_norm_bound() {
  const auto fx = load_fixture("constants.json");
  auto frozen = [&](int n, double tau) {
    for (const auto& e : fx.at("lemma1"))
      if (e.at("n") == n && e.at("tau") == tau) return e.at("c").get<double>();
    throw InvalidInput("no frozen constant for this n, tau");
  };
  Rng rng(1002);
  const double s = 0.5;
  int violations = 0, cases = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = t % 2 ? 3 : 2;
    const auto cat = frequency_catalog(n);
    const Series R = random_series(rng, n, 1, n == 2 ? 10 : 5, 0.5, 0.3);
    const auto sol = solve_homological(R, cat.omega, {cat.alpha, cat.tau});
    const double in = majorant_norm(R, {1.0, s, 1.0});
    for (double sigma : {0.05, 0.1, 0.2, 0.4}) {
      const double lhs = majorant_norm(sol.F, {1.0, s - sigma, 1.0});
      const double rhs = frozen(n, cat.tau) * in / (cat.alpha * std::pow(sigma, cat.tau + n));
      worst = std::max(worst, lhs / rhs);
      if (!(lhs <= rhs)) ++violations;
      ++cases;
    }
  }
  Outcome o;
  o.verdict = pass_if(violations == 0);
  o.summary = std::to_string(violations) + " violations in " + std::to_string(cases) +
              " cases, largest lhs/rhs " + fmt("%.3e", worst);
  o.record = {{"violations", violations}, {"worst", worst}};
  return o;
}

Outcome decay_and_truncation() {
  Rng rng(1003);
  int decay_fail = 0, tail_fail = 0, guard_fail = 0;
  double worst_decay = 0.0, worst_tail = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + t % 2;
    const double s = rng.uniform(0.05, 1.0);
    if (t % 2 == 0) {
      const Series v = random_series(rng, n, 1, 2 + rng.integer(0, 4), 0.5, rng.uniform(0.2, 1.0));
      const auto r = fourier_decay_check(v, s);
      worst_decay = std::max(worst_decay, r.worst_ratio);
      if (!r.ok) ++decay_fail;
    } else {
      // against the sampled strip supremum of an angle-only series
      const Series v = random_series(rng, 2, 0, 2 + rng.integer(0, 4), 0.5, rng.uniform(0.2, 1.0));
      const auto r = fourier_decay_check(v, s, strip_sup_sampled(v, s, 32));
      worst_decay = std::max(worst_decay, r.worst_ratio);
      if (!r.ok) ++decay_fail;
    }
  }
  for (int t = 0; t < 1000; ++t) {
    const int n = 1 + t % 3;
    const int K = rng.integer(2, n == 3 ? 10 : 20);
    const double sigma = rng.uniform(1.0 / K, 0.6);
    const double s = sigma + rng.uniform(0.05, 0.5);
    const Series v = random_series(rng, n, 0, n == 3 ? K + 6 : 3 * K, 0.7, rng.uniform(s + 0.05, s + 1.0));
    const double bound = truncation_bound(majorant_norm(v, {1.0, s, 1.0}), K, sigma, n);
    const double tail = majorant_norm(truncate_fourier(v, K).tail, {1.0, s - sigma, 1.0});
    worst_tail = std::max(worst_tail, tail / bound);
    if (!(tail <= bound)) ++tail_fail;
    try {
      truncation_bound(1.0, K, 0.99 / K, n);
      ++guard_fail;
    } catch (const KSigmaTooSmall&) {
    }
  }
  Outcome o;
  o.verdict = pass_if(decay_fail == 0 && tail_fail == 0 && guard_fail == 0);
  o.summary = "decay failures " + std::to_string(decay_fail) + "/1000 (worst ratio " + fmt("%.3f", worst_decay) +
              "), tail failures " + std::to_string(tail_fail) + "/1000 (worst tail/bound " + fmt("%.3e", worst_tail) +
              "), K sigma < 1 accepted " + std::to_string(guard_fail) + " times";
  o.record = {{"decay_fail", decay_fail}, {"tail_fail", tail_fail}, {"guard_fail", guard_fail},
              {"worst_decay", worst_decay}, {"worst_tail", worst_tail}};
  return o;
}

Outcome dirichlet() {
  Rng rng(1004);
  int violations = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto w = random_vec(rng, 2, 0.5, 2.5);
    const double sup = std::max(std::abs(w[0]), std::abs(w[1]));
    for (int K : {5, 10, 20}) {
      const double bound = 2.0 * sup / K;
      const double d = dirichlet_min(w, K);
      worst = std::max(worst, d / bound);
      if (!(d <= bound)) ++violations;
    }
  }
  Outcome o;
  o.verdict = pass_if(violations == 0);
  o.summary = std::to_string(violations) + " violations in 300 cases, largest ratio " + fmt("%.3f", worst);
  o.record = {{"violations", violations}, {"worst", worst}};
  return o;
}

Outcome measure_scaling() {
  const auto fx = load_fixture("measure.json");
  const FrequencyBox box{fx.at("box").at("lo").get<std::vector<double>>(),
                         fx.at("box").at("hi").get<std::vector<double>>()};
  const double tau = fx.at("tau");
  const int K = fx.at("K_max");
  const auto n_samples = fx.at("n_samples").get<std::int64_t>();
  const auto seed = fx.at("seed").get<std::uint64_t>();
  std::vector<double> est;
  bool below = true;
  json rows = json::array();
  std::string detail;
  for (double a : fx.at("alphas").get<std::vector<double>>()) {
    const auto m = resonance_measure(box, {a, tau}, K, n_samples, seed);
    const double ub = slab_upper_bound(box, {a, tau}, K);
    below = below && m.estimate <= ub + 3 * m.stderr_;
    est.push_back(m.estimate);
    rows.push_back({{"alpha", a}, {"estimate", m.estimate}, {"stderr", m.stderr_}, {"upper", ub}});
    detail += (detail.empty() ? "" : ", ") + fmt("%.4g", m.estimate);
  }
  bool ratios = true;
  std::string rtxt;
  for (std::size_t i = 1; i < est.size(); ++i) {
    const double r = est[i] / est[i - 1];
    ratios = ratios && std::abs(r - 2.0) <= 0.5;
    rtxt += (rtxt.empty() ? "" : ", ") + fmt("%.3f", r);
  }
  Outcome o;
  o.verdict = pass_if(ratios && below);
  o.summary = "estimates " + detail + "; ratios " + rtxt + (below ? "; under the slab bound" : "; ABOVE the slab bound");
  o.record = rows;
  return o;
}

struct FixtureRun {
  Problem p;
  RunSetup su;
  TorusResult res;
};

FixtureRun fixture_run() {
  FixtureRun f{parse_problem(load_fixture("kam_fixture.json")), {}, {}};
  f.su = make_setup(f.p, f.p.omega_star);
  f.res = iterate(f.su.N0, f.su.P0, f.su.schedule, f.p.run);
  return f;
}

Outcome fixture_convergence() {
  const auto f = fixture_run();
  const auto& res = f.res;
  Outcome o;
  if (!res.converged || !res.embedding) {
    o.summary = "did not converge";
    return o;
  }
  const double resid = conjugacy_residual(*res.embedding, series_hamiltonian(f.su.N0, f.su.P0), res.omega_final);
  const double lag = lagrangian_defect(*res.embedding);
  // residuals at or below the stopping level are clamped to it
  const double floor = f.p.run.residual_stop;
  double slope = std::numeric_limits<double>::infinity();
  int pairs = 0;
  for (std::size_t j = 0; j + 1 < res.history.size(); ++j) {
    const double a = res.history[j].residual, b = std::max(res.history[j + 1].residual, floor);
    if (!(a > floor) || !(a < 1.0)) continue;
    slope = std::min(slope, std::log(b) / std::log(a));
    ++pairs;
  }
  const auto steps = res.steps.size();
  o.verdict = pass_if(steps <= 6 && resid <= 1e-9 && lag <= 1e-9 && pairs > 0 && slope >= 1.3);
  o.summary = std::to_string(steps) + " steps, conjugacy residual " + fmt("%.2e", resid) + ", Lagrangian defect " +
              fmt("%.2e", lag) + ", residual order " + fmt("%.2f", slope) + " over " + std::to_string(pairs) +
              " pairs";
  o.record = {{"steps", steps}, {"residual", resid}, {"lagrangian", lag}, {"slope", slope},
              {"omega", res.omega_final}};
  return o;
}

Outcome symplectic_records() {
  const auto f = fixture_run();
  Rng rng(1007);
  double sym = 0.0, block = 0.0, affine = 0.0;
  const int n = 2, m = 4;
  for (const auto& rec : f.res.records) {
    FlowField field(rec.F);
    const double r = f.su.schedule.r[0];
    for (int t = 0; t < 20; ++t) {
      std::vector<double> y = random_vec(rng, 2, -r, r), th = random_vec(rng, 2, 0.0, 2 * M_PI);
      y.insert(y.end(), th.begin(), th.end());
      const std::vector<double> y0 = y;
      std::vector<double> D;
      flow_time1(field, y, {}, 0, &D);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          double s = 0.0;
          for (int i = 0; i < n; ++i) s += -D[i * m + a] * D[(n + i) * m + b] + D[(n + i) * m + a] * D[i * m + b];
          const double want = (a < n && b == a + n) ? -1.0 : (a >= n && b == a - n) ? 1.0 : 0.0;
          sym = std::max(sym, std::abs(s - want));
        }
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) block = std::max(block, std::abs(D[(n + i) * m + j]));
      std::vector<double> p = y0, q = y0, mid = y0;
      p[0] += 0.5 * r;
      q[1] -= 0.5 * r;
      mid[0] += 0.25 * r;
      mid[1] -= 0.25 * r;
      flow_time1(field, p, {});
      flow_time1(field, q, {});
      flow_time1(field, mid, {});
      for (int j = 0; j < m; ++j) affine = std::max(affine, std::abs(p[j] + q[j] - 2 * mid[j]));
    }
  }
  Outcome o;
  const auto count = f.res.records.size();
  o.verdict = pass_if(count > 0 && sym <= 1e-9 && block <= 1e-12 && affine <= 1e-12);
  o.summary = std::to_string(count) + " records, symplectic defect " + fmt("%.2e", sym) + ", d theta/dI " +
              fmt("%.2e", block) + ", affinity defect " + fmt("%.2e", affine);
  o.record = {{"records", count}, {"sym", sym}, {"block", block}, {"affine", affine}};
  return o;
}

Outcome classical_front_end() {
  const auto fx = load_fixture("classical.json");
  const Problem p = parse_problem(fx);
  const auto out = run_problem(p);
  Outcome o;
  if (!out.result.converged || !out.match) {
    o.summary = "frequency-matched run did not converge";
    return o;
  }
  auto z = fx;
  z["epsilon"] = 0.0;
  const auto zero = run_problem(parse_problem(z));
  double p0_err = 0.0;
  for (int j = 0; j < 2; ++j) p0_err = std::max(p0_err, std::abs(zero.p0[j] - p.omega_star[j]));
  const bool flat = zero.result.converged && zero.result.steps.empty() && zero.result.embedding &&
                    zero.result.embedding->trivial();
  o.verdict = pass_if(out.match->mismatch <= 1e-8 && out.oracle_residual <= 1e-8 && flat && p0_err <= 1e-13);
  o.summary = "frequency mismatch " + fmt("%.2e", out.match->mismatch) + ", residual against omega* " +
              fmt("%.2e", out.oracle_residual) + "; eps = 0: " + (flat ? "flat torus" : "NOT flat") +
              " at |p0 - omega| " + fmt("%.1e", p0_err);
  o.record = {{"mismatch", out.match->mismatch}, {"residual", out.oracle_residual}, {"p0", out.p0},
              {"flat", flat}, {"p0_err", p0_err}};
  return o;
}

Outcome lipschitz() {
  Rng rng(1009);
  int exact_fail = 0;
  double worst_excess = -1.0, max_lambda = 0.0;
  for (int dim : {1, 2})
    for (int t = 0; t < 50; ++t) {
      // samples of a random smooth function, so lambda stays of order one
      const std::vector<double> amp = random_vec(rng, 2, -1.0, 1.0), freq = random_vec(rng, 2, 0.5, 2.0);
      const double phase = rng.uniform(0.0, 6.0);
      SampledFunction sf;
      const int npts = rng.integer(2, 12);
      for (int i = 0; i < npts; ++i) {
        const auto x = random_vec(rng, dim, -1.0, 1.0);
        const double y = dim == 2 ? x[1] : 0.0;
        sf.x.push_back(x);
        sf.u.push_back(amp[0] * std::sin(freq[0] * x[0] + phase) + amp[1] * std::cos(freq[1] * y));
      }
      const auto U = lipschitz_extend(sf);
      const double lam = U.lambda();
      max_lambda = std::max(max_lambda, lam);
      for (int i = 0; i < npts; ++i)
        if (U(sf.x[i]) != sf.u[i]) ++exact_fail;
      // difference quotients between neighbouring grid nodes, sup-norm distance of the actual nodes
      const int G = dim == 1 ? 301 : 201;
      const double lo = -1.5, step = 3.0 / (G - 1);
      std::vector<double> coord(G);
      for (int a = 0; a < G; ++a) coord[a] = lo + a * step;
      double measured = 0.0;
      if (dim == 1) {
        for (int a = 0; a + 1 < G; ++a)
          measured = std::max(measured, std::abs(U(std::vector<double>{coord[a + 1]}) - U(std::vector<double>{coord[a]})) /
                                            (coord[a + 1] - coord[a]));
      } else {
        std::vector<double> vals(static_cast<std::size_t>(G) * G);
        for (int a = 0; a < G; ++a)
          for (int b = 0; b < G; ++b) vals[static_cast<std::size_t>(a) * G + b] = U(std::vector<double>{coord[a], coord[b]});
        auto at = [&](int a, int b) { return vals[static_cast<std::size_t>(a) * G + b]; };
        for (int a = 0; a + 1 < G; ++a)
          for (int b = 0; b + 1 < G; ++b) {
            const double da = coord[a + 1] - coord[a], db = coord[b + 1] - coord[b];
            measured = std::max(measured, std::abs(at(a + 1, b) - at(a, b)) / da);
            measured = std::max(measured, std::abs(at(a, b + 1) - at(a, b)) / db);
            measured = std::max(measured, std::abs(at(a + 1, b + 1) - at(a, b)) / std::max(da, db));
          }
      }
      worst_excess = std::max(worst_excess, measured - lam);
    }
  Outcome o;
  o.verdict = pass_if(exact_fail == 0 && worst_excess <= 1e-12);
  o.summary = std::to_string(exact_fail) + " inexact sample values, largest (measured - lambda) " +
              fmt("%.2e", worst_excess) + ", lambda up to " + fmt("%.2f", max_lambda);
  o.record = {{"exact_fail", exact_fail}, {"excess", worst_excess}, {"max_lambda", max_lambda}};
  return o;
}

Outcome inverse() {
  const double h = 0.5, delta = h / 8;
  Rng rng(1010);
  std::vector<std::vector<double>> samples;
  for (int i = 0; i < 100; ++i) samples.push_back(random_vec(rng, 2, -h / 4, h / 4));
  const VectorMap f = [&](std::span<const double> w) {
    return std::vector<double>{w[0] + delta * std::sin(w[0]), w[1] + delta * std::sin(w[1])};
  };
  const auto r = analytic_inverse(f, delta, h, samples);
  Outcome o;
  o.verdict = pass_if(r.round_trip <= 1e-11 && h / 4 * r.dphi_minus_id <= delta);
  o.summary = "round trip " + fmt("%.2e", r.round_trip) + ", (h/4)|Dphi - Id| " + fmt("%.3e", h / 4 * r.dphi_minus_id) +
              " vs delta " + fmt("%.3e", delta);
  o.record = {{"round_trip", r.round_trip}, {"dphi", r.dphi_minus_id}, {"phi", r.phi_minus_id}};
  return o;
}

Outcome eps_alpha_sweep() {
  const Problem p = parse_problem(load_fixture("sweep.json"));
  const auto t = sweep(p, p.sweep);
  const bool band = t.slope && *t.slope >= 1.3 && *t.slope <= 2.7;
  Outcome o;
  o.verdict = band && t.monotone ? Verdict::Pass : Verdict::Warn;
  std::string cells;
  for (const auto& c : t.cells) cells += (cells.empty() ? "" : ", ") + fmt("%.3g", c.eps_max);
  o.summary = "eps_max " + cells + "; slope " + (t.slope ? fmt("%.3f", *t.slope) : std::string("n/a")) +
              (t.monotone ? ", nondecreasing" : ", NOT monotone");
  o.record = t.to_json();
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds, 0 for none
  std::function<Outcome()> run;
};

Outcome timed(const Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    o.verdict = Verdict::Fail;
    o.summary = std::string("threw: ") + e.what();
    o.record = {{"error", e.what()}};
  }
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (c.time_limit > 0 && o.seconds > c.time_limit) {
    o.verdict = Verdict::Fail;
    o.summary += "; over the " + fmt("%.0f", c.time_limit) + " s limit";
  }
  return o;
}

const char* label(Verdict v) { return v == Verdict::Pass ? "PASS" : v == Verdict::Warn ? "WARN" : "FAIL"; }

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "homological solver vs per-mode division", 5, homological_oracle},
      {2, "solver norm bound", 0, solver_norm_bound},
      {3, "Fourier decay and truncation tails", 10, decay_and_truncation},
      {4, "Dirichlet bound", 0, dirichlet},
      {5, "resonance measure scaling", 30, measure_scaling},
      {6, "fixture convergence", 60, fixture_convergence},
      {7, "symplectic time-1 maps", 0, symplectic_records},
      {8, "classical front end", 0, classical_front_end},
      {9, "Lipschitz extension", 0, lipschitz},
      {10, "analytic inverse", 0, inverse},
      {11, "eps vs alpha sweep", 600, eps_alpha_sweep},
  };
  bool failed = false;
  json first = json::array();
  for (const auto& c : criteria) {
    const Outcome o = timed(c);
    failed = failed || o.verdict == Verdict::Fail;
    first.push_back(o.record);
    std::cout << label(o.verdict) << " " << c.id << " " << c.name << ": " << o.summary << " ("
              << fmt("%.2f", o.seconds) << " s)" << std::endl;
  }

  json second = json::array();
  int differing = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    second.push_back(timed(criteria[i]).record);
    if (second.back().dump() != first[i].dump()) ++differing;
  }
  const bool same = differing == 0;
  failed = failed || !same;
  std::cout << label(pass_if(same)) << " 12 determinism: " << differing
            << " of 11 criteria differ on rerun" << std::endl;
  return failed ? 1 : 0;
}
