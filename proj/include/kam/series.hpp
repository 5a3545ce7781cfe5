#pragma once

// Truncated Fourier-Taylor polynomials in actions I and angles theta:
//
//   f(I, theta) = sum_{m, k} c_{m,k} I^m exp(i <k, theta>),
//
// with |m| <= d_max (total degree) and |k|_1 <= K. Coefficients are complex
// and satisfy c_{m,-k} = conj(c_{m,k}), so real points map to real values.

#include <complex>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace kam {

using Complex = std::complex<double>;

inline constexpr int kMaxDof = 4;
inline constexpr int kMaxDegree = 15;
inline constexpr int kMaxWavenumber = 2047;

/// Complex neighbourhood D_{r,s} x O_h: action radius, angle strip half-width,
/// parameter radius.
struct DomainSpec {
  double r = 1.0;
  double s = 0.0;
  double h = 1.0;
};

/// N = e + <omega, I>.
struct NormalForm {
  double e = 0.0;
  std::vector<double> omega;
};

/// Unpacked (m, k) index pair of one coefficient.
struct ModeIndex {
  std::vector<int> m;
  std::vector<int> k;
};

class Series {
 public:
  struct Term {
    std::uint64_t key;
    Complex c;
  };

  /// Accumulates coefficients keyed by (m, k). Only the canonical half of the
  /// Fourier lattice (first nonzero k_j positive, or k = 0) is stored; `finish`
  /// mirrors it, which makes the reality symmetry exact.
  class Builder {
   public:
    Builder(int n, int d_max, int K);
    void add(std::span<const int> m, std::span<const int> k, Complex c);
    void add_key(std::uint64_t canonical_key, Complex c) { acc_[canonical_key] += c; }
    Series finish() const;
    int dof() const { return n_; }

   private:
    int n_, d_max_, K_;
    std::unordered_map<std::uint64_t, Complex> acc_;
  };

  Series() = default;
  Series(int n, int d_max, int K);

  static Series constant(int n, double value, int d_max = 0, int K = 0);
  static Series from_normal_form(const NormalForm& nf, int d_max = 1, int K = 0);

  int dof() const { return n_; }
  int degree_cap() const { return d_max_; }
  int fourier_cap() const { return K_; }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  const std::vector<Term>& terms() const { return terms_; }

  Complex coeff(std::span<const int> m, std::span<const int> k) const;
  ModeIndex index(const Term& t) const;

  /// Largest |m| and |k|_1 actually present (0 for the zero series).
  int taylor_degree() const;
  int fourier_degree() const;

  /// Same coefficients, different declared caps (coefficients beyond the new
  /// caps are not allowed; use the truncation operations for that).
  Series with_caps(int d_max, int K) const;

  // Key packing. Lexicographic order of (m, k) equals numeric order of keys.
  static std::uint64_t pack(int n, const int* m, const int* k);
  static void unpack(int n, std::uint64_t key, int* m, int* k);
  static bool canonical(int n, const int* k);

 private:
  friend class Builder;
  int n_ = 0;
  int d_max_ = 0;
  int K_ = 0;
  std::vector<Term> terms_;  // sorted by key, no zeros
};

struct Truncated {
  Series value;
  double tail_norm = 0.0;
};

struct Split {
  Series kept;
  Series tail;
};

Series add(const Series& a, const Series& b);
Series subtract(const Series& a, const Series& b);
Series scale(const Series& a, double factor);
/// a + factor * b
Series axpy(const Series& a, double factor, const Series& b);

inline Series operator+(const Series& a, const Series& b) { return add(a, b); }
inline Series operator-(const Series& a, const Series& b) { return subtract(a, b); }
inline Series operator*(double f, const Series& a) { return scale(a, f); }

/// Convolution product truncated to |m| <= d_out, |k|_1 <= K_out; the discarded
/// part is measured with the majorant norm on `dom`.
Truncated multiply(const Series& a, const Series& b, int d_out, int K_out,
                   const DomainSpec& dom = {});

/// {A, B} = sum_j A_{theta_j} B_{I_j} - A_{I_j} B_{theta_j}, truncated as in multiply.
Truncated poisson(const Series& a, const Series& b, int d_out, int K_out,
                  const DomainSpec& dom = {});

/// Zero-based coordinate index j.
Series partial_theta(const Series& a, int j);
Series partial_I(const Series& a, int j);

/// theta-average: keeps the k = 0 modes.
Series mean(const Series& a);

/// d_omega F = {F, N} = sum_j omega_j F_{theta_j}.
Series d_omega(const Series& a, std::span<const double> omega);

Split truncate_fourier(const Series& a, int K);
Split truncate_taylor(const Series& a, int d);

/// Drops terms with |c| r^{|m|} e^{|k| s} < tol.
Split prune(const Series& a, const DomainSpec& dom, double tol);

/// sum |c_{m,k}| r^{|m|} e^{|k|_1 s}, an upper bound for the sup-norm on D_{r,s}.
double majorant_norm(const Series& a, const DomainSpec& dom);

Complex eval(const Series& a, std::span<const Complex> I, std::span<const Complex> theta);
double eval_real(const Series& a, std::span<const double> I, std::span<const double> theta);

nlohmann::json to_json(const Series& a);
Series series_from_json(const nlohmann::json& j);

/// Fast repeated evaluation of one or more series at real points. All series
/// must share the dof count; evaluation returns one real value per series.
class CompiledSeries {
 public:
  CompiledSeries() = default;
  explicit CompiledSeries(std::span<const Series> list);
  explicit CompiledSeries(const Series& s) : CompiledSeries(std::span<const Series>(&s, 1)) {}

  int outputs() const { return outputs_; }
  void eval(std::span<const double> I, std::span<const double> theta, std::span<double> out) const;
  double eval1(std::span<const double> I, std::span<const double> theta) const;

 private:
  int n_ = 0;
  int outputs_ = 0;
  int kmax_ = 0;
  int dmax_ = 0;
  // canonical-half modes; weights already doubled for k != 0
  std::vector<int> m_;
  std::vector<int> k_;
  std::vector<Complex> c_;  // modes x outputs
  mutable std::vector<Complex> table_;
  mutable std::vector<double> powers_;
};

}  // namespace kam
