#include "kam/smalldiv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kam/errors.hpp"
#include "kam/parallel.hpp"

namespace kam {

double FrequencyBox::volume() const {
  double v = 1.0;
  for (std::size_t j = 0; j < lo.size(); ++j) v *= hi[j] - lo[j];
  return v;
}

double FrequencyBox::diameter() const {
  double d2 = 0.0;
  for (std::size_t j = 0; j < lo.size(); ++j) d2 += (hi[j] - lo[j]) * (hi[j] - lo[j]);
  return std::sqrt(d2);
}

void FrequencyBox::validate() const {
  if (lo.empty() || lo.size() != hi.size()) throw InvalidInput("box bounds must be nonempty and of equal length");
  for (std::size_t j = 0; j < lo.size(); ++j)
    if (!(hi[j] > lo[j]) || !std::isfinite(lo[j]) || !std::isfinite(hi[j]))
      throw InvalidInput("box axis " + std::to_string(j) + " is empty or unbounded");
}

namespace {

double dot(const int* k, std::span<const double> w) {
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) s += k[j] * w[j];
  return s;
}

int l1(const int* k, int n) {
  int s = 0;
  for (int j = 0; j < n; ++j) s += std::abs(k[j]);
  return s;
}

struct KTable {
  int n = 0;
  std::vector<int> k;
  std::vector<double> weight;  // |k|^tau
};

KTable canonical_table(int n, int K_max, double tau) {
  KTable t;
  t.n = n;
  for_each_canonical_k(n, K_max, [&](const int* k) {
    t.k.insert(t.k.end(), k, k + n);
    t.weight.push_back(std::pow(static_cast<double>(l1(k, n)), tau));
    return true;
  });
  return t;
}

}  // namespace

DiophantineCheck check_diophantine(std::span<const double> omega, const DiophantineParams& p,
                                   int K_max) {
  const int n = static_cast<int>(omega.size());
  if (n < 1 || n > 8) throw InvalidInput("frequency dimension must be in [1, 8]");
  if (K_max < 1) throw InvalidInput("K_max must be >= 1");
  if (p.alpha < 0.0) throw InvalidInput("alpha must be nonnegative");
  DiophantineCheck out;
  out.K_max = K_max;
  out.alpha_max = std::numeric_limits<double>::infinity();
  for_each_canonical_k(n, K_max, [&](const int* k) {
    const double div = std::abs(dot(k, omega));
    const double scaled = div * std::pow(static_cast<double>(l1(k, n)), p.tau);
    if (scaled < out.alpha_max) {
      out.alpha_max = scaled;
      out.worst_k.assign(k, k + n);
      out.worst_divisor = div;
    }
    if (scaled < p.alpha) {
      out.ok = false;
      out.alpha_max = scaled;
      out.worst_k.assign(k, k + n);
      out.worst_divisor = div;
      return false;
    }
    return true;
  });
  if (p.alpha > 0.0) out.margin = out.alpha_max / p.alpha;
  return out;
}

double dirichlet_min(std::span<const double> omega, int K) {
  const int n = static_cast<int>(omega.size());
  if (n < 1 || n > 8) throw InvalidInput("frequency dimension must be in [1, 8]");
  if (K < 1) throw InvalidInput("K must be >= 1");
  double best = std::numeric_limits<double>::infinity();
  // odometer over the cube [-K, K]^n, keeping the canonical half
  std::vector<int> k(n, -K);
  while (true) {
    int lead = 0;
    for (int j = 0; j < n && lead == 0; ++j) lead = k[j];
    if (lead > 0) best = std::min(best, std::abs(dot(k.data(), omega)));
    int j = n - 1;
    while (j >= 0 && k[j] == K) k[j--] = -K;
    if (j < 0) break;
    ++k[j];
  }
  return best;
}

MeasureEstimate resonance_measure(const FrequencyBox& box, const DiophantineParams& p, int K_max,
                                  std::int64_t n_samples, std::uint64_t seed) {
  box.validate();
  if (n_samples < 1000) throw InvalidInput("n_samples must be >= 1000");
  if (K_max < 1) throw InvalidInput("K_max must be >= 1");
  const int n = box.dim();
  MeasureEstimate out;
  out.n_samples = n_samples;
  out.seed = seed;
  if (p.alpha <= 0.0) return out;
  const KTable table = canonical_table(n, K_max, p.tau);
  const std::size_t nk = table.weight.size();

  const std::size_t chunks = 64;
  std::vector<std::int64_t> hits(chunks, 0);
  const std::int64_t per = (n_samples + chunks - 1) / chunks;
  parallel_for(chunks, [&](std::size_t c) {
    std::vector<double> w(n);
    const std::int64_t lo = static_cast<std::int64_t>(c) * per;
    const std::int64_t hi = std::min(n_samples, lo + per);
    std::int64_t h = 0;
    for (std::int64_t i = lo; i < hi; ++i) {
      const std::uint64_t base = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i)));
      for (int j = 0; j < n; ++j) {
        const double u = unit_uniform(splitmix64(base + static_cast<std::uint64_t>(j)));
        w[j] = box.lo[j] + u * (box.hi[j] - box.lo[j]);
      }
      for (std::size_t q = 0; q < nk; ++q) {
        double d = 0.0;
        for (int j = 0; j < n; ++j) d += table.k[q * n + j] * w[j];
        if (std::abs(d) * table.weight[q] < p.alpha) {
          ++h;
          break;
        }
      }
    }
    hits[c] = h;
  });
  std::int64_t total = 0;
  for (auto h : hits) total += h;
  const double frac = static_cast<double>(total) / static_cast<double>(n_samples);
  const double vol = box.volume();
  out.estimate = vol * frac;
  out.stderr_ = vol * std::sqrt(frac * (1.0 - frac) / static_cast<double>(n_samples));
  return out;
}

double slab_upper_bound(const FrequencyBox& box, const DiophantineParams& p, int K_max) {
  box.validate();
  const int n = box.dim();
  const double span = std::pow(box.diameter(), n - 1);
  double sum = 0.0;
  for_each_canonical_k(n, K_max, [&](const int* k) {
    // range of <k, omega> over the box
    double lo = 0.0, hi = 0.0, norm2 = 0.0;
    for (int j = 0; j < n; ++j) {
      lo += std::min(k[j] * box.lo[j], k[j] * box.hi[j]);
      hi += std::max(k[j] * box.lo[j], k[j] * box.hi[j]);
      norm2 += static_cast<double>(k[j]) * k[j];
    }
    const double half = p.alpha / std::pow(static_cast<double>(l1(k, n)), p.tau);
    if (hi <= -half || lo >= half) return true;  // slab misses the box
    sum += 2.0 * half / std::sqrt(norm2) * span;
    return true;
  });
  return sum;
}

bool omega_alpha_member(std::span<const double> omega, const FrequencyBox& box,
                        const DiophantineParams& p, int K_max) {
  box.validate();
  if (static_cast<int>(omega.size()) != box.dim()) throw DimensionMismatch("omega vs box dimension");
  double dist = std::numeric_limits<double>::infinity();
  for (int j = 0; j < box.dim(); ++j) {
    if (omega[j] < box.lo[j] || omega[j] > box.hi[j]) return false;
    dist = std::min({dist, omega[j] - box.lo[j], box.hi[j] - omega[j]});
  }
  if (dist < p.alpha) return false;
  return check_diophantine(omega, p, K_max).ok;
}

CatalogEntry frequency_catalog(int n) {
  // alpha = min_{0<|k|_1<=500} |<k,omega>| |k|^tau, measured by brute force
  // (fixtures/constants.json, tools/gen_fixtures.py).
  if (n == 2) return {{1.0, (std::sqrt(5.0) - 1.0) / 2.0}, 1.2, 0.6180339887498949, 500};
  if (n == 3) return {{1.0, std::cbrt(2.0), std::cbrt(4.0)}, 2.2, 1.0, 500};
  throw InvalidInput("frequency catalog covers n = 2 and n = 3 only");
}

}  // namespace kam
