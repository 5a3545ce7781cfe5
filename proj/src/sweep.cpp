#include "kam/sweep.hpp"

#include <cmath>
#include <sstream>

#include "kam/errors.hpp"
#include "kam/parallel.hpp"

namespace kam {

std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 2) return std::nullopt;
  const double den = m * sxx - sx * sx;
  if (den <= 0.0) return std::nullopt;
  return (m * sxy - sx * sy) / den;
}

SweepTable sweep(const Problem& prob, const SweepSpec& spec) {
  if (!prob.classical) throw InvalidInput("sweep needs a classical problem");
  if (spec.alphas.empty()) throw InvalidInput("sweep needs a nonempty alpha list");
  if (spec.eps_grid.empty()) throw InvalidInput("sweep needs a nonempty eps grid");
  for (double a : spec.alphas)
    if (!(a > 0.0)) throw InvalidInput("sweep alphas must be positive");
  if (!(prob.alpha > 0.0)) throw InvalidInput("sweep needs the problem alpha > 0");

  SweepTable table;
  table.cells.resize(spec.alphas.size());
  parallel_for(spec.alphas.size(), [&](std::size_t i) {
    SweepCell& cell = table.cells[i];
    cell.alpha = spec.alphas[i];
    Problem q = prob;
    q.alpha = cell.alpha;
    q.schedule.alpha = cell.alpha;
    for (double& w : q.omega_star) w *= cell.alpha / prob.alpha;
    cell.omega = q.omega_star;
    q.match_frequency = false;
    q.run.force = true;
    q.run.embed = false;
    cell.threshold = epsilon_threshold(*q.classical, cell.alpha, q.schedule.s0, q.tau + 1.0, spec.gamma);

    auto converges = [&](double eps) {
      ++cell.runs;
      q.classical->epsilon = eps;
      try {
        const RunSetup su = make_setup(q, q.omega_star);
        return iterate(su.N0, su.P0, su.schedule, q.run).converged;
      } catch (const Error& e) {
        cell.last_failure = e.code();
        return false;
      }
    };
    // invariant: grid[lo] converges (lo = -1 stands for eps = 0), grid[hi] fails (hi = size past the end)
    long lo = -1, hi = static_cast<long>(spec.eps_grid.size());
    std::string fail_at_hi;
    while (hi - lo > 1) {
      const long mid = (lo + hi) / 2;
      cell.last_failure.clear();
      if (converges(spec.eps_grid[mid])) {
        lo = mid;
      } else {
        hi = mid;
        fail_at_hi = cell.last_failure.empty() ? "no_convergence" : cell.last_failure;
      }
    }
    cell.last_failure = fail_at_hi;
    cell.eps_max = lo >= 0 ? spec.eps_grid[lo] : 0.0;
  });

  std::vector<double> a, e;
  for (std::size_t i = 0; i < table.cells.size(); ++i) {
    a.push_back(table.cells[i].alpha);
    e.push_back(table.cells[i].eps_max);
  }
  for (std::size_t i = 0; i < table.cells.size(); ++i)
    for (std::size_t k = 0; k < table.cells.size(); ++k)
      if (a[i] < a[k] && e[i] > e[k]) table.monotone = false;
  table.slope = loglog_slope(a, e);
  return table;
}

nlohmann::json SweepTable::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : cells)
    rows.push_back({{"alpha", c.alpha},
                    {"omega", c.omega},
                    {"eps_max", c.eps_max},
                    {"threshold", c.threshold},
                    {"runs", c.runs},
                    {"failure", c.last_failure}});
  return {{"cells", rows}, {"slope", slope ? nlohmann::json(*slope) : nlohmann::json(nullptr)}, {"monotone", monotone}};
}

std::string SweepTable::to_csv() const {
  // shortest round-trip digits, as in the JSON output
  auto num = [](double x) { return nlohmann::json(x).dump(); };
  std::ostringstream o;
  o << "alpha,eps_max,threshold,runs\n";
  for (const auto& c : cells) o << num(c.alpha) << ',' << num(c.eps_max) << ',' << num(c.threshold) << ',' << c.runs << '\n';
  return o.str();
}

}  // namespace kam
