#include "kam/problem.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kam/errors.hpp"

namespace kam {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw InvalidInput("'" + where + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.count(key)) throw InvalidInput("unknown field '" + (where.empty() ? key : where + "." + key) + "'");
}

template <class T>
T get(const json& obj, const char* key, const std::string& where) {
  const std::string name = where.empty() ? key : where + "." + key;
  if (!obj.contains(key)) throw InvalidInput("missing field '" + name + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidInput("field '" + name + "' has the wrong type");
  }
}

template <class T>
void get_opt(const json& obj, const char* key, const std::string& where, T& out) {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

std::vector<int> index_vec(const json& obj, const char* key, const std::string& where, int n) {
  auto v = get<std::vector<int>>(obj, key, where);
  if (static_cast<int>(v.size()) != n) throw InvalidInput("field '" + where + "." + key + "' must have length n");
  return v;
}

Polynomial parse_h(const json& h, int n) {
  const auto kind = get<std::string>(h, "kind", "h");
  if (kind == "quadratic") {
    check_keys(h, {"kind", "A"}, "h");
    return Polynomial::quadratic(n, get<std::vector<double>>(h, "A", "h"));
  }
  if (kind == "callable-poly") {
    check_keys(h, {"kind", "coeffs"}, "h");
    std::vector<Monomial> terms;
    const auto& cs = h.at("coeffs");
    if (!cs.is_array()) throw InvalidInput("field 'h.coeffs' must be an array");
    for (const auto& c : cs) {
      check_keys(c, {"m", "c"}, "h.coeffs[]");
      terms.push_back({index_vec(c, "m", "h.coeffs[]", n), get<double>(c, "c", "h.coeffs[]")});
    }
    return Polynomial(n, std::move(terms));
  }
  throw InvalidInput("field 'h.kind' must be 'quadratic' or 'callable-poly'");
}

std::vector<FourierTerm> parse_f(const json& f, int n) {
  if (!f.is_array()) throw InvalidInput("field 'f' must be an array of terms");
  std::vector<FourierTerm> out;
  for (const auto& t : f) {
    check_keys(t, {"m", "k", "cos", "sin"}, "f[]");
    FourierTerm ft;
    ft.m = t.contains("m") ? index_vec(t, "m", "f[]", n) : std::vector<int>(n, 0);
    ft.k = index_vec(t, "k", "f[]", n);
    get_opt(t, "cos", "f[]", ft.a);
    get_opt(t, "sin", "f[]", ft.b);
    out.push_back(std::move(ft));
  }
  return out;
}

std::vector<double> parse_grid(const json& g) {
  if (g.is_array()) return g.get<std::vector<double>>();
  check_keys(g, {"min", "max", "per_decade"}, "sweep.eps_grid");
  const double lo = get<double>(g, "min", "sweep.eps_grid");
  const double hi = get<double>(g, "max", "sweep.eps_grid");
  const int per = get<int>(g, "per_decade", "sweep.eps_grid");
  if (!(lo > 0.0) || !(hi > lo) || per < 1) throw InvalidInput("field 'sweep.eps_grid' needs 0 < min < max, per_decade >= 1");
  std::vector<double> out;
  const int steps = static_cast<int>(std::ceil(std::log10(hi / lo) * per - 1e-9));
  for (int i = 0; i <= steps; ++i) out.push_back(std::min(hi, lo * std::pow(10.0, static_cast<double>(i) / per)));
  return out;
}

}  // namespace

const std::vector<std::string>& override_keys() {
  static const std::vector<std::string> keys = {
      "alpha",           "tau",              "epsilon",         "K_max",           "match_frequency",
      "schedule.s0",     "schedule.r0",      "schedule.E0",     "schedule.K0",     "schedule.c",
      "schedule.c0",     "schedule.c_a",     "schedule.c_b",    "schedule.iters",  "run.max_iters",
      "run.residual_stop", "run.E_floor",    "run.force",       "run.embed",       "run.grid",
      "lie.max_order",   "lie.tol",          "lie.prune_tol",   "lie.k_cap",       "lie.max_terms",
      "lie.divisor_factor", "match.max_outer", "match.tol",     "match.fd_step",   "expansion.d_max",
      "expansion.grid",  "expansion.K",      "expansion.chop",  "expansion.alias_tol", "sweep.gamma"};
  return keys;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw InvalidInput("override must look like key=value: '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  const auto& keys = override_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw InvalidInput("unknown override key '" + key + "'");
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    throw InvalidInput("override value for '" + key + "' is not a number or boolean");
  }
  const auto dot = key.find('.');
  if (dot == std::string::npos) {
    j[key] = value;
  } else {
    j[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
}

Problem parse_problem(const json& j) {
  check_keys(j, {"kind", "n", "omega_star", "alpha", "tau", "K_max", "e", "P", "h", "f", "epsilon", "domain", "M",
                 "F_bound", "expansion", "match_frequency", "schedule", "run", "lie", "match", "sweep", "comment"},
             "");
  Problem p;
  p.kind = j.contains("kind") ? get<std::string>(j, "kind", "") : (j.contains("h") ? "classical" : "series");
  if (p.kind != "series" && p.kind != "classical") throw InvalidInput("field 'kind' must be 'series' or 'classical'");
  p.n = get<int>(j, "n", "");
  if (p.n < 1 || p.n > kMaxDof) throw InvalidInput("field 'n' must be in [1, 4]");
  p.omega_star = get<std::vector<double>>(j, "omega_star", "");
  if (static_cast<int>(p.omega_star.size()) != p.n) throw InvalidInput("field 'omega_star' must have length n");
  p.alpha = get<double>(j, "alpha", "");
  p.tau = get<double>(j, "tau", "");
  get_opt(j, "K_max", "", p.K_max);

  if (p.kind == "series") {
    for (const char* k : {"h", "f", "epsilon", "domain", "M", "F_bound", "expansion"})
      if (j.contains(k)) throw InvalidInput(std::string("field '") + k + "' only applies to classical problems");
    p.N0.omega = p.omega_star;
    get_opt(j, "e", "", p.N0.e);
    if (!j.contains("P")) throw InvalidInput("missing field 'P'");
    p.P0 = series_from_json(j.at("P"));
    if (p.P0.dof() != p.n) throw InvalidInput("field 'P' dof does not match n");
    p.match_frequency = false;
  } else {
    if (j.contains("P") || j.contains("e")) throw InvalidInput("fields 'P' and 'e' only apply to series problems");
    if (!j.contains("h")) throw InvalidInput("missing field 'h'");
    const auto h = parse_h(j.at("h"), p.n);
    const auto f = j.contains("f") ? parse_f(j.at("f"), p.n) : std::vector<FourierTerm>{};
    const double eps = get<double>(j, "epsilon", "");
    const json& d = j.contains("domain") ? j.at("domain") : throw InvalidInput("missing field 'domain'");
    check_keys(d, {"lo", "hi"}, "domain");
    FrequencyBox box{get<std::vector<double>>(d, "lo", "domain"), get<std::vector<double>>(d, "hi", "domain")};
    double M = 0.0, F = 0.0;
    get_opt(j, "M", "", M);
    get_opt(j, "F_bound", "", F);
    p.classical = make_classical(p.n, h, f, eps, std::move(box), M, F);
    // the quadratic part of h stays in P and is not small, so the constants are bypassed
    p.run.force = true;
    if (j.contains("expansion")) {
      const auto& e = j.at("expansion");
      check_keys(e, {"d_max", "grid", "K", "chop", "alias_tol"}, "expansion");
      get_opt(e, "d_max", "expansion", p.expansion.d_max);
      get_opt(e, "grid", "expansion", p.expansion.grid);
      get_opt(e, "K", "expansion", p.expansion.K);
      get_opt(e, "chop", "expansion", p.expansion.chop);
      get_opt(e, "alias_tol", "expansion", p.expansion.alias_tol);
    }
  }
  get_opt(j, "match_frequency", "", p.match_frequency);

  p.schedule.n = p.n;
  p.schedule.alpha = p.alpha;
  p.schedule.tau = p.tau;
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    check_keys(s, {"s0", "r0", "E0", "K0", "c", "c0", "c_a", "c_b", "iters"}, "schedule");
    get_opt(s, "s0", "schedule", p.schedule.s0);
    p.r0_given = s.contains("r0");
    get_opt(s, "r0", "schedule", p.schedule.r0);
    get_opt(s, "E0", "schedule", p.schedule.E0);
    get_opt(s, "K0", "schedule", p.schedule.K0);
    get_opt(s, "c", "schedule", p.schedule.c);
    get_opt(s, "c0", "schedule", p.schedule.c0);
    get_opt(s, "c_a", "schedule", p.schedule.c_a);
    get_opt(s, "c_b", "schedule", p.schedule.c_b);
    get_opt(s, "iters", "schedule", p.schedule.iters);
  }
  if (j.contains("run")) {
    const auto& r = j.at("run");
    check_keys(r, {"max_iters", "residual_stop", "E_floor", "force", "embed", "grid"}, "run");
    get_opt(r, "max_iters", "run", p.run.max_iters);
    get_opt(r, "residual_stop", "run", p.run.residual_stop);
    get_opt(r, "E_floor", "run", p.run.E_floor);
    get_opt(r, "force", "run", p.run.force);
    get_opt(r, "embed", "run", p.run.embed);
    get_opt(r, "grid", "run", p.run.grid);
  }
  if (j.contains("lie")) {
    const auto& l = j.at("lie");
    check_keys(l, {"max_order", "tol", "prune_tol", "k_cap", "max_terms", "divisor_factor"}, "lie");
    get_opt(l, "max_order", "lie", p.run.lie.max_order);
    get_opt(l, "tol", "lie", p.run.lie.tol);
    get_opt(l, "prune_tol", "lie", p.run.lie.prune_tol);
    get_opt(l, "k_cap", "lie", p.run.lie.k_cap);
    get_opt(l, "max_terms", "lie", p.run.lie.max_terms);
    get_opt(l, "divisor_factor", "lie", p.run.lie.divisor_factor);
  }
  if (j.contains("match")) {
    const auto& m = j.at("match");
    check_keys(m, {"max_outer", "tol", "fd_step"}, "match");
    get_opt(m, "max_outer", "match", p.match.max_outer);
    get_opt(m, "tol", "match", p.match.tol);
    get_opt(m, "fd_step", "match", p.match.fd_step);
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    check_keys(s, {"alphas", "eps_grid", "gamma"}, "sweep");
    get_opt(s, "alphas", "sweep", p.sweep.alphas);
    if (s.contains("eps_grid")) p.sweep.eps_grid = parse_grid(s.at("eps_grid"));
    get_opt(s, "gamma", "sweep", p.sweep.gamma);
    if (!std::is_sorted(p.sweep.eps_grid.begin(), p.sweep.eps_grid.end()))
      throw InvalidInput("field 'sweep.eps_grid' must be ascending");
  }
  return p;
}

RunSetup make_setup(const Problem& p, std::span<const double> omega) {
  RunSetup su;
  ScheduleParams sp = p.schedule;
  if (p.kind == "series") {
    su.N0 = p.N0;
    su.N0.omega.assign(omega.begin(), omega.end());
    su.P0 = p.P0;
  } else {
    auto cs = setup_classical(*p.classical, omega, p.expansion);
    su.N0 = std::move(cs.N0);
    su.P0 = std::move(cs.P0);
    if (!p.r0_given) sp.r0 = cs.r_auto;
  }
  su.schedule = build_schedule(sp);
  return su;
}

ProblemFamily make_family(const Problem& p) {
  return [p](std::span<const double> omega) { return make_setup(p, omega); };
}

RunOutcome run_problem(const Problem& p) {
  RunOutcome out;
  std::vector<double> param = p.omega_star;
  if (p.match_frequency) {
    out.match = frequency_match(make_family(p), p.omega_star, p.run, p.match);
    out.result = out.match->result;
    param = out.match->omega_param;
  } else {
    const RunSetup su = make_setup(p, param);
    out.result = iterate(su.N0, su.P0, su.schedule, p.run);
  }
  if (p.classical) {
    out.p0 = setup_classical(*p.classical, param, p.expansion).p0;
    if (out.result.embedding)
      out.oracle_residual = conjugacy_residual(*out.result.embedding, classical_hamiltonian(*p.classical, out.p0),
                                               p.omega_star);
  } else {
    out.oracle_residual = out.result.residual;
  }
  return out;
}

}  // namespace kam
