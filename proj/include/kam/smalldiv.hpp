#pragma once

// Diophantine frequencies: |<k, omega>| >= alpha / |k|^tau for 0 < |k|_1.

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <vector>

namespace kam {

struct DiophantineParams {
  double alpha = 0.0;
  double tau = 1.0;
  double nu() const { return tau + 1.0; }
};

/// Closed per-axis intervals.
struct FrequencyBox {
  std::vector<double> lo;
  std::vector<double> hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const;
  double diameter() const;  // euclidean
  void validate() const;
};

struct DiophantineCheck {
  bool ok = true;
  /// alpha_max / alpha; empty when alpha = 0.
  std::optional<double> margin;
  std::vector<int> worst_k;
  double worst_divisor = 0.0;
  /// min over scanned k of |<k,omega>| |k|^tau. When ok is false the scan
  /// stopped at the first violation, so this is the value at worst_k only.
  double alpha_max = 0.0;
  int K_max = 0;
};

/// Scans the canonical half lattice (k and -k give the same divisor) by
/// increasing |k|_1, lexicographically within a shell.
DiophantineCheck check_diophantine(std::span<const double> omega, const DiophantineParams& p,
                                   int K_max);

/// min over 0 < |k|_inf <= K of |<k, omega>|.
double dirichlet_min(std::span<const double> omega, int K);

struct MeasureEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
};

/// Monte Carlo volume of {omega in box : min_k |<k,omega>| |k|^tau < alpha}.
/// Sample i is drawn from a counter-based generator keyed on (seed, i), so
/// the result does not depend on the worker count.
MeasureEstimate resonance_measure(const FrequencyBox& box, const DiophantineParams& p, int K_max,
                                  std::int64_t n_samples, std::uint64_t seed);

/// Sum over distinct slabs that meet the box of width(k) * diam^{n-1}.
double slab_upper_bound(const FrequencyBox& box, const DiophantineParams& p, int K_max);

/// Diophantine up to K_max and sup-distance to the box boundary >= alpha.
bool omega_alpha_member(std::span<const double> omega, const FrequencyBox& box,
                        const DiophantineParams& p, int K_max);

struct CatalogEntry {
  std::vector<double> omega;
  double tau = 0.0;
  double alpha = 0.0;
  int K_max = 0;
};

CatalogEntry frequency_catalog(int n);

/// Visits every canonical k with 0 < |k|_1 <= K_max in scan order. Stops when
/// fn returns false.
template <class Fn>
void for_each_canonical_k(int n, int K_max, Fn&& fn);

/// splitmix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double unit_uniform(std::uint64_t bits) { return (bits >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------------------

namespace detail {

// All vectors k[j..n) with |k[j..n)|_1 = rest, in lexicographic order.
template <class Fn>
bool shell_rec(int n, int j, int rest, int* k, Fn& fn) {
  if (j == n - 1) {
    if (rest == 0) {
      k[j] = 0;
      return fn(static_cast<const int*>(k));
    }
    k[j] = -rest;
    if (!fn(static_cast<const int*>(k))) return false;
    k[j] = rest;
    return fn(static_cast<const int*>(k));
  }
  for (int v = -rest; v <= rest; ++v) {
    k[j] = v;
    if (!shell_rec(n, j + 1, rest - std::abs(v), k, fn)) return false;
  }
  return true;
}

}  // namespace detail

template <class Fn>
void for_each_canonical_k(int n, int K_max, Fn&& fn) {
  int k[8] = {0};
  for (int L = 1; L <= K_max; ++L) {
    // leading nonzero entry at index j, positive; larger j sorts first
    for (int j = n - 1; j >= 0; --j) {
      for (int i = 0; i < j; ++i) k[i] = 0;
      for (int v = 1; v <= L; ++v) {
        k[j] = v;
        if (j == n - 1) {
          if (v != L) continue;
          if (!fn(static_cast<const int*>(k))) return;
        } else if (!detail::shell_rec(n, j + 1, L - v, k, fn)) {
          return;
        }
      }
    }
  }
}

}  // namespace kam
