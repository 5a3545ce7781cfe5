#pragma once

// Shared helpers for the test suites: seeded random series and independent
// evaluation oracles that do not go through the library's own evaluators.

#include <cmath>
#include <complex>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "kam/series.hpp"

namespace kamtest {

using kam::Complex;
using kam::Series;

inline nlohmann::json load_fixture(const std::string& name) {
  std::ifstream in(std::string(KAM_FIXTURE_DIR) + "/" + name);
  return nlohmann::json::parse(in);
}

inline const std::vector<double>& golden() {
  static const std::vector<double> w = {1.0, (std::sqrt(5.0) - 1.0) / 2.0};
  return w;
}

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double lo = -1.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
};

/// All multi-indices m >= 0 with |m| <= d.
inline std::vector<std::vector<int>> taylor_indices(int n, int d) {
  std::vector<std::vector<int>> out;
  std::vector<int> m(n, 0);
  while (true) {
    int s = 0;
    for (int v : m) s += v;
    if (s <= d) out.push_back(m);
    int j = n - 1;
    while (j >= 0 && m[j] == d) m[j--] = 0;
    if (j < 0) break;
    ++m[j];
  }
  return out;
}

/// All k with |k|_1 <= K.
inline std::vector<std::vector<int>> fourier_indices(int n, int K) {
  std::vector<std::vector<int>> out;
  std::vector<int> k(n, -K);
  while (true) {
    int s = 0;
    for (int v : k) s += std::abs(v);
    if (s <= K) out.push_back(k);
    int j = n - 1;
    while (j >= 0 && k[j] == K) k[j--] = -K;
    if (j < 0) break;
    ++k[j];
  }
  return out;
}

inline bool canonical(const std::vector<int>& k) {
  for (int v : k) {
    if (v > 0) return true;
    if (v < 0) return false;
  }
  return true;
}

/// Random real series: every (m, k) in the caps present with probability
/// `fill`, magnitude decaying like exp(-decay |k|).
inline Series random_series(Rng& rng, int n, int d, int K, double fill = 0.5, double decay = 0.5) {
  Series::Builder b(n, d, K);
  for (const auto& m : taylor_indices(n, d))
    for (const auto& k : fourier_indices(n, K)) {
      if (!canonical(k)) continue;
      if (rng.uniform(0.0, 1.0) > fill) continue;
      int k1 = 0;
      for (int v : k) k1 += std::abs(v);
      const double mag = std::exp(-decay * k1);
      bool zero = true;
      for (int v : k) zero = zero && v == 0;
      b.add(m, k, Complex(rng.uniform() * mag, zero ? 0.0 : rng.uniform() * mag));
    }
  return b.finish();
}

/// Direct sum over every stored coefficient with std::pow / std::exp.
inline Complex oracle_eval(const Series& a, const std::vector<Complex>& I, const std::vector<Complex>& th) {
  Complex s = 0.0;
  for (const auto& t : a.terms()) {
    const auto idx = a.index(t);
    Complex v = t.c;
    Complex phase = 0.0;
    for (int j = 0; j < a.dof(); ++j) {
      v *= std::pow(I[j], idx.m[j]);
      phase += static_cast<double>(idx.k[j]) * th[j];
    }
    s += v * std::exp(Complex(0.0, 1.0) * phase);
  }
  return s;
}

inline double oracle_eval_real(const Series& a, const std::vector<double>& I, const std::vector<double>& th) {
  std::vector<Complex> Ic(I.begin(), I.end()), tc(th.begin(), th.end());
  return oracle_eval(a, Ic, tc).real();
}

inline std::vector<double> random_vec(Rng& rng, int n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

/// Max |c_a - c_b| over the union of stored modes.
inline double coeff_distance(const Series& a, const Series& b) {
  return kam::majorant_norm(a - b, {1.0, 0.0, 1.0});
}

inline bool reality_holds(const Series& a) {
  for (const auto& t : a.terms()) {
    auto idx = a.index(t);
    for (auto& v : idx.k) v = -v;
    if (std::abs(a.coeff(idx.m, idx.k) - std::conj(t.c)) != 0.0) return false;
  }
  return true;
}

}  // namespace kamtest
