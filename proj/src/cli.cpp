#include "kam/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kam/errors.hpp"
#include "kam/problem.hpp"
#include "kam/smalldiv.hpp"
#include "kam/sweep.hpp"

namespace kam {

using nlohmann::json;

namespace {

int exit_code_for(const std::string& code) {
  if (code == "invalid_input" || code == "dimension_mismatch" || code == "schedule_infeasible") return 1;
  return 2;
}

int report(std::ostream& err, const std::string& code, const std::string& message, int status) {
  err << json{{"error", {{"code", code}, {"message", message}}}}.dump() << '\n';
  return status;
}

json read_json(const std::string& path) {
  if (path.empty()) throw InvalidInput("missing --input");
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open input file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput("input file '" + path + "' is not valid JSON: " + e.what());
  }
}

Problem load(const CliConfig& c) {
  json j = read_json(c.input);
  for (const auto& o : c.overrides) apply_override(j, o);
  Problem p = parse_problem(j);
  if (c.max_iters > 0) p.run.max_iters = c.max_iters;
  if (c.tol > 0.0) p.run.residual_stop = c.tol;
  if (c.force) p.run.force = true;
  return p;
}

void emit(const CliConfig& c, std::ostream& out, const std::string& text) {
  if (c.output.empty()) {
    out << text;
    return;
  }
  std::ofstream f(c.output);
  if (!f) throw InvalidInput("cannot write output file '" + c.output + "'");
  f << text;
}

std::string convergence_csv(const TorusResult& r) {
  std::ostringstream o;
  o << "j,eps_j,E_j,residual_j\n";
  for (const auto& h : r.history)
    o << h.j << ',' << json(h.eps).dump() << ',' << json(h.E).dump() << ',' << json(h.residual).dump() << '\n';
  return o.str();
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return report(err, e.code(), e.what(), exit_code_for(e.code()));
  } catch (const json::exception& e) {
    return report(err, "invalid_input", e.what(), 1);
  } catch (const std::exception& e) {
    return report(err, "internal", e.what(), 2);
  }
}

}  // namespace

int cmd_run(const CliConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Problem p = load(c);
    const RunOutcome o = run_problem(p);
    if (!c.table.empty()) {
      std::ofstream t(c.table);
      if (!t) throw InvalidInput("cannot write table file '" + c.table + "'");
      t << convergence_csv(o.result);
    }
    if (c.format == "csv") {
      emit(c, out, convergence_csv(o.result));
    } else {
      json j = o.result.to_json(c.dump_F);
      j["oracle_residual"] = o.oracle_residual >= 0.0 ? json(o.oracle_residual) : json(nullptr);
      if (!o.p0.empty()) j["p0"] = o.p0;
      if (o.match)
        j["match"] = {{"omega_param", o.match->omega_param},
                      {"outer_iterations", o.match->outer_iterations},
                      {"mismatch", o.match->mismatch}};
      emit(c, out, j.dump(2) + "\n");
    }
    return o.result.converged ? 0 : 2;
  });
}

int cmd_check_freq(const CliConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::vector<double> omega = c.omega;
    double alpha = c.alpha, tau = c.tau;
    int K_max = c.K_max;
    if (!c.input.empty()) {
      const Problem p = load(c);
      omega = p.omega_star;
      alpha = p.alpha;
      tau = p.tau;
      K_max = p.K_max;
    }
    if (omega.empty()) throw InvalidInput("check-freq needs --input or --omega");
    if (alpha < 0.0 || tau < 0.0) throw InvalidInput("check-freq needs --alpha and --tau");
    const auto r = check_diophantine(omega, {alpha, tau}, K_max);
    const json j = {{"ok", r.ok},
                    {"margin", r.margin ? json(*r.margin) : json(nullptr)},
                    {"worst_k", r.worst_k},
                    {"worst_divisor", r.worst_divisor},
                    {"alpha_max", r.alpha_max},
                    {"K_max", r.K_max}};
    emit(c, out, j.dump(2) + "\n");
    return r.ok ? 0 : 2;
  });
}

int cmd_measure(const CliConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    json j = read_json(c.input);
    const std::set<std::string> allowed = {"box", "tau", "K_max", "alphas", "n_samples", "seed", "comment"};
    for (const auto& [key, _] : j.items())
      if (!allowed.count(key)) throw InvalidInput("unknown field '" + key + "'");
    for (const char* key : {"box", "tau", "K_max", "alphas", "n_samples"})
      if (!j.contains(key)) throw InvalidInput(std::string("missing field '") + key + "'");
    FrequencyBox box{j.at("box").at("lo").get<std::vector<double>>(), j.at("box").at("hi").get<std::vector<double>>()};
    box.validate();
    const double tau = j.at("tau").get<double>();
    const int K_max = j.at("K_max").get<int>();
    const auto alphas = j.at("alphas").get<std::vector<double>>();
    if (alphas.empty()) throw InvalidInput("field 'alphas' must be nonempty");
    const auto n_samples = j.at("n_samples").get<std::int64_t>();
    std::uint64_t seed = j.value("seed", std::uint64_t{0});
    if (c.seed_given) seed = c.seed;

    json rows = json::array();
    std::vector<double> est;
    for (double a : alphas) {
      const DiophantineParams dp{a, tau};
      const auto m = resonance_measure(box, dp, K_max, n_samples, seed);
      est.push_back(m.estimate);
      rows.push_back({{"alpha", a},
                      {"estimate", m.estimate},
                      {"stderr", m.stderr_},
                      {"n_samples", m.n_samples},
                      {"seed", m.seed},
                      {"upper_bound", slab_upper_bound(box, dp, K_max)}});
    }
    json res = {{"tau", tau}, {"K_max", K_max}, {"rows", rows}};
    if (const auto s = loglog_slope(alphas, est); s && alphas.size() > 1) res["slope"] = *s;
    if (c.format == "csv") {
      std::ostringstream o;
      o << "alpha,estimate,stderr,upper_bound\n";
      for (const auto& r : rows)
        o << r["alpha"].dump() << ',' << r["estimate"].dump() << ',' << r["stderr"].dump() << ','
          << r["upper_bound"].dump() << '\n';
      emit(c, out, o.str());
    } else {
      emit(c, out, res.dump(2) + "\n");
    }
    return 0;
  });
}

int cmd_sweep(const CliConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Problem p = load(c);
    const SweepTable t = sweep(p, p.sweep);
    emit(c, out, c.format == "csv" ? t.to_csv() : t.to_json().dump(2) + "\n");
    return 0;
  });
}

int cmd_step(const CliConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Problem p = load(c);
    const RunSetup su = make_setup(p, p.omega_star);
    const StepResult st = apply_step(su.N0, su.P0, su.schedule.step(0), p.run.lie, p.run.force);
    json j = to_json(st.report);
    j["omega_plus"] = st.N_plus.omega;
    j["e_plus"] = st.N_plus.e;
    if (c.dump_F) {
      j["F"] = to_json(st.record.F);
      j["R"] = to_json(st.R);
      j["P_plus"] = to_json(st.P_plus);
    }
    emit(c, out, j.dump(2) + "\n");
    return 0;
  });
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"kam: invariant tori of nearly integrable Hamiltonians"};
  app.require_subcommand(1);
  CliConfig c;

  auto common = [&](CLI::App* sub, bool problem) {
    sub->add_option("--input,-i", c.input, "Input JSON file");
    sub->add_option("--output,-o", c.output, "Output file (default: stdout)");
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    if (problem) {
      sub->add_option("--set", c.overrides, "Override a problem field, key=value (e.g. schedule.E0=0.01)");
      sub->add_option("--max-iters", c.max_iters, "Iteration budget (default: from file, else 10)");
      sub->add_option("--tol", c.tol, "Residual stop (default: from file, else 1e-12)");
      sub->add_flag("--force", c.force, "Run past failed step conditions and the size precondition");
      sub->add_flag("--dump-F", c.dump_F, "Include generating functions and series in the output");
    }
  };
  auto* run = app.add_subcommand("run", "Run the iteration and write the torus result");
  common(run, true);
  run->add_option("--table", c.table, "Also write the convergence CSV (j, eps_j, E_j, residual_j) here");
  auto* check = app.add_subcommand("check-freq", "Check the Diophantine condition for a frequency");
  common(check, true);
  check->add_option("--omega", c.omega, "Frequency vector (instead of --input)");
  check->add_option("--alpha", c.alpha, "Diophantine alpha");
  check->add_option("--tau", c.tau, "Diophantine tau");
  check->add_option("--k-max", c.K_max, "Lattice scan bound")->capture_default_str();
  auto* measure = app.add_subcommand("measure", "Monte Carlo measure of the resonance zones");
  common(measure, false);
  measure->add_option("--seed", c.seed, "Seed (default: from file, else 0)")->each([&](const std::string&) {
    c.seed_given = true;
  });
  auto* sw = app.add_subcommand("sweep", "Largest converging epsilon against alpha");
  common(sw, true);
  sw->add_option("--seed", c.seed, "Unused by the sweep; accepted for uniform invocation");
  auto* step = app.add_subcommand("step", "Run one step and print its report");
  common(step, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return report(err, "usage", e.what(), 1);
  }

  if (run->parsed()) return cmd_run(c, out, err);
  if (check->parsed()) return cmd_check_freq(c, out, err);
  if (measure->parsed()) return cmd_measure(c, out, err);
  if (sw->parsed()) return cmd_sweep(c, out, err);
  return cmd_step(c, out, err);
}

}  // namespace kam
