#include "kam/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "kam/errors.hpp"

namespace kam {

namespace {

constexpr int kSlotBits = 16;
constexpr int kDegreeBits = 4;
constexpr int kWaveBits = 12;
constexpr int kWaveBias = 2048;

int l1(const int* v, int n) {
  int s = 0;
  for (int j = 0; j < n; ++j) s += std::abs(v[j]);
  return s;
}

void check_same_dof(const Series& a, const Series& b) {
  if (a.dof() != b.dof())
    throw DimensionMismatch("series dof " + std::to_string(a.dof()) + " vs " +
                            std::to_string(b.dof()));
}

Complex project_real_if_zero_mode(int n, const int* k, Complex c) {
  for (int j = 0; j < n; ++j)
    if (k[j] != 0) return c;
  return {c.real(), 0.0};
}

// Decoded view of a series used by the O(N_a N_b) loops.
struct Decoded {
  int n = 0;
  std::vector<int> m;  // size * n
  std::vector<int> k;
  std::vector<Complex> c;
  std::size_t size() const { return c.size(); }
};

Decoded decode(const Series& a) {
  Decoded d;
  d.n = a.dof();
  d.m.resize(a.size() * d.n);
  d.k.resize(a.size() * d.n);
  d.c.reserve(a.size());
  std::size_t i = 0;
  for (const auto& t : a.terms()) {
    Series::unpack(d.n, t.key, &d.m[i * d.n], &d.k[i * d.n]);
    d.c.push_back(t.c);
    ++i;
  }
  return d;
}

}  // namespace

std::uint64_t Series::pack(int n, const int* m, const int* k) {
  std::uint64_t key = 0;
  for (int j = 0; j < n; ++j) {
    if (m[j] < 0 || m[j] > kMaxDegree) throw InvalidInput("Taylor exponent out of range");
    key = (key << kDegreeBits) | static_cast<std::uint64_t>(m[j]);
  }
  for (int j = 0; j < n; ++j) {
    if (std::abs(k[j]) > kMaxWavenumber) throw InvalidInput("wavenumber out of range");
    key = (key << kWaveBits) | static_cast<std::uint64_t>(k[j] + kWaveBias);
  }
  return key;
}

void Series::unpack(int n, std::uint64_t key, int* m, int* k) {
  for (int j = n - 1; j >= 0; --j) {
    k[j] = static_cast<int>(key & ((1u << kWaveBits) - 1)) - kWaveBias;
    key >>= kWaveBits;
  }
  for (int j = n - 1; j >= 0; --j) {
    m[j] = static_cast<int>(key & ((1u << kDegreeBits) - 1));
    key >>= kDegreeBits;
  }
}

bool Series::canonical(int n, const int* k) {
  for (int j = 0; j < n; ++j) {
    if (k[j] > 0) return true;
    if (k[j] < 0) return false;
  }
  return true;  // k = 0
}

Series::Series(int n, int d_max, int K) : n_(n), d_max_(d_max), K_(K) {
  if (n < 1 || n > kMaxDof) throw InvalidInput("dof must be in [1, 4]");
  if (d_max < 0 || d_max > kMaxDegree) throw InvalidInput("d_max out of range");
  if (K < 0) throw InvalidInput("Fourier cutoff must be nonnegative");
  static_assert(kMaxDof * kSlotBits <= 64);
  static_assert(kDegreeBits + kWaveBits == kSlotBits);
}

Series::Builder::Builder(int n, int d_max, int K) : n_(n), d_max_(d_max), K_(K) {
  Series probe(n, d_max, K);  // validates caps
  (void)probe;
}

void Series::Builder::add(std::span<const int> m, std::span<const int> k, Complex c) {
  if (static_cast<int>(m.size()) != n_ || static_cast<int>(k.size()) != n_)
    throw DimensionMismatch("mode index length does not match dof");
  int dm = 0;
  for (int v : m) dm += v;
  if (dm > d_max_) throw InvalidInput("mode exceeds Taylor cap");
  if (l1(k.data(), n_) > K_) throw InvalidInput("mode exceeds Fourier cap");
  if (canonical(n_, k.data())) {
    acc_[pack(n_, m.data(), k.data())] += c;
  } else {
    int neg[kMaxDof];
    for (int j = 0; j < n_; ++j) neg[j] = -k[j];
    acc_[pack(n_, m.data(), neg)] += std::conj(c);
  }
}

Series Series::Builder::finish() const {
  Series out(n_, d_max_, K_);
  out.terms_.reserve(acc_.size() * 2);
  int m[kMaxDof], k[kMaxDof], nk[kMaxDof];
  for (const auto& [key, c0] : acc_) {
    unpack(n_, key, m, k);
    Complex c = project_real_if_zero_mode(n_, k, c0);
    if (c == Complex(0.0, 0.0)) continue;
    out.terms_.push_back({key, c});
    bool zero = true;
    for (int j = 0; j < n_; ++j) {
      nk[j] = -k[j];
      zero = zero && k[j] == 0;
    }
    if (!zero) out.terms_.push_back({pack(n_, m, nk), std::conj(c)});
  }
  std::sort(out.terms_.begin(), out.terms_.end(),
            [](const Term& a, const Term& b) { return a.key < b.key; });
  return out;
}

Series Series::constant(int n, double value, int d_max, int K) {
  Builder b(n, d_max, K);
  std::vector<int> z(n, 0);
  b.add(z, z, value);
  return b.finish();
}

Series Series::from_normal_form(const NormalForm& nf, int d_max, int K) {
  const int n = static_cast<int>(nf.omega.size());
  Builder b(n, std::max(d_max, 1), K);
  std::vector<int> z(n, 0), m(n, 0);
  b.add(z, z, nf.e);
  for (int j = 0; j < n; ++j) {
    m.assign(n, 0);
    m[j] = 1;
    b.add(m, z, nf.omega[j]);
  }
  return b.finish();
}

Complex Series::coeff(std::span<const int> m, std::span<const int> k) const {
  if (static_cast<int>(m.size()) != n_ || static_cast<int>(k.size()) != n_)
    throw DimensionMismatch("mode index length does not match dof");
  const std::uint64_t key = pack(n_, m.data(), k.data());
  auto it = std::lower_bound(terms_.begin(), terms_.end(), key,
                             [](const Term& t, std::uint64_t v) { return t.key < v; });
  if (it == terms_.end() || it->key != key) return {0.0, 0.0};
  return it->c;
}

ModeIndex Series::index(const Term& t) const {
  ModeIndex idx{std::vector<int>(n_), std::vector<int>(n_)};
  unpack(n_, t.key, idx.m.data(), idx.k.data());
  return idx;
}

int Series::taylor_degree() const {
  int best = 0, m[kMaxDof], k[kMaxDof];
  for (const auto& t : terms_) {
    unpack(n_, t.key, m, k);
    int d = 0;
    for (int j = 0; j < n_; ++j) d += m[j];
    best = std::max(best, d);
  }
  return best;
}

int Series::fourier_degree() const {
  int best = 0, m[kMaxDof], k[kMaxDof];
  for (const auto& t : terms_) {
    unpack(n_, t.key, m, k);
    best = std::max(best, l1(k, n_));
  }
  return best;
}

Series Series::with_caps(int d_max, int K) const {
  if (taylor_degree() > d_max || fourier_degree() > K)
    throw InvalidInput("with_caps would drop coefficients");
  Series out(n_, d_max, K);
  out.terms_ = terms_;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Series combine(const Series& a, double fa, const Series& b, double fb) {
  check_same_dof(a, b);
  Series::Builder out(a.dof(), std::max(a.degree_cap(), b.degree_cap()),
                      std::max(a.fourier_cap(), b.fourier_cap()));
  int m[kMaxDof], k[kMaxDof];
  for (const auto& t : a.terms()) {
    Series::unpack(a.dof(), t.key, m, k);
    if (Series::canonical(a.dof(), k)) out.add_key(t.key, fa * t.c);
  }
  for (const auto& t : b.terms()) {
    Series::unpack(b.dof(), t.key, m, k);
    if (Series::canonical(b.dof(), k)) out.add_key(t.key, fb * t.c);
  }
  return out.finish();
}

// Canonical-half bookkeeping shared by multiply and poisson.
struct PairAccumulator {
  int n, d_out, K_out;
  Series::Builder kept;
  Series::Builder dropped;

  PairAccumulator(int n_, int d_, int K_)
      : n(n_), d_out(d_), K_out(K_), kept(n_, d_, K_), dropped(n_, kMaxDegree, 4 * kMaxWavenumber) {}

  void add(const int* m, const int* k, Complex c) {
    if (!Series::canonical(n, k)) return;
    int dm = 0;
    for (int j = 0; j < n; ++j) dm += m[j];
    const std::uint64_t key = Series::pack(n, m, k);
    if (dm <= d_out && l1(k, n) <= K_out)
      kept.add_key(key, c);
    else
      dropped.add_key(key, c);
  }
};

}  // namespace

Series add(const Series& a, const Series& b) { return combine(a, 1.0, b, 1.0); }
Series subtract(const Series& a, const Series& b) { return combine(a, 1.0, b, -1.0); }
Series axpy(const Series& a, double factor, const Series& b) { return combine(a, 1.0, b, factor); }

Series scale(const Series& a, double factor) {
  Series::Builder out(a.dof(), a.degree_cap(), a.fourier_cap());
  int m[kMaxDof], k[kMaxDof];
  for (const auto& t : a.terms()) {
    Series::unpack(a.dof(), t.key, m, k);
    if (Series::canonical(a.dof(), k)) out.add_key(t.key, factor * t.c);
  }
  return out.finish();
}

Truncated multiply(const Series& a, const Series& b, int d_out, int K_out, const DomainSpec& dom) {
  check_same_dof(a, b);
  const int n = a.dof();
  const Decoded da = decode(a), db = decode(b);
  PairAccumulator acc(n, d_out, K_out);
  int m[kMaxDof], k[kMaxDof];
  for (std::size_t i = 0; i < da.size(); ++i) {
    const int* ma = &da.m[i * n];
    const int* ka = &da.k[i * n];
    for (std::size_t l = 0; l < db.size(); ++l) {
      const int* mb = &db.m[l * n];
      const int* kb = &db.k[l * n];
      for (int j = 0; j < n; ++j) {
        m[j] = ma[j] + mb[j];
        k[j] = ka[j] + kb[j];
      }
      acc.add(m, k, da.c[i] * db.c[l]);
    }
  }
  return {acc.kept.finish(), majorant_norm(acc.dropped.finish(), dom)};
}

Truncated poisson(const Series& a, const Series& b, int d_out, int K_out, const DomainSpec& dom) {
  check_same_dof(a, b);
  const int n = a.dof();
  const Decoded da = decode(a), db = decode(b);
  PairAccumulator acc(n, d_out, K_out);
  const Complex I1(0.0, 1.0);
  int m[kMaxDof], k[kMaxDof];
  for (std::size_t i = 0; i < da.size(); ++i) {
    const int* ma = &da.m[i * n];
    const int* ka = &da.k[i * n];
    for (std::size_t l = 0; l < db.size(); ++l) {
      const int* mb = &db.m[l * n];
      const int* kb = &db.k[l * n];
      for (int j = 0; j < n; ++j) k[j] = ka[j] + kb[j];
      if (!Series::canonical(n, k)) continue;
      const Complex ab = da.c[i] * db.c[l];
      // term j lands on m_a + m_b - e_j with weight i (k^a_j m^b_j - m^a_j k^b_j)
      for (int j = 0; j < n; ++j) {
        const int w = ka[j] * mb[j] - ma[j] * kb[j];
        if (w == 0) continue;
        for (int q = 0; q < n; ++q) m[q] = ma[q] + mb[q];
        m[j] -= 1;
        acc.add(m, k, I1 * static_cast<double>(w) * ab);
      }
    }
  }
  return {acc.kept.finish(), majorant_norm(acc.dropped.finish(), dom)};
}

Series partial_theta(const Series& a, int j) {
  if (j < 0 || j >= a.dof()) throw InvalidInput("partial_theta index out of range");
  Series::Builder out(a.dof(), a.degree_cap(), a.fourier_cap());
  int m[kMaxDof], k[kMaxDof];
  for (const auto& t : a.terms()) {
    Series::unpack(a.dof(), t.key, m, k);
    if (!Series::canonical(a.dof(), k) || k[j] == 0) continue;
    out.add_key(t.key, Complex(0.0, static_cast<double>(k[j])) * t.c);
  }
  return out.finish();
}

Series partial_I(const Series& a, int j) {
  if (j < 0 || j >= a.dof()) throw InvalidInput("partial_I index out of range");
  Series::Builder out(a.dof(), a.degree_cap(), a.fourier_cap());
  int m[kMaxDof], k[kMaxDof];
  for (const auto& t : a.terms()) {
    Series::unpack(a.dof(), t.key, m, k);
    if (!Series::canonical(a.dof(), k) || m[j] == 0) continue;
    const double f = m[j];
    m[j] -= 1;
    out.add_key(Series::pack(a.dof(), m, k), f * t.c);
  }
  return out.finish();
}

Series mean(const Series& a) {
  Series::Builder out(a.dof(), a.degree_cap(), a.fourier_cap());
  int m[kMaxDof], k[kMaxDof];
  for (const auto& t : a.terms()) {
    Series::unpack(a.dof(), t.key, m, k);
    if (l1(k, a.dof()) == 0) out.add_key(t.key, t.c);
  }
  return out.finish();
}

Series d_omega(const Series& a, std::span<const double> omega) {
  if (static_cast<int>(omega.size()) != a.dof()) throw DimensionMismatch("omega length");
  Series::Builder out(a.dof(), a.degree_cap(), a.fourier_cap());
  int m[kMaxDof], k[kMaxDof];
  for (const auto& t : a.terms()) {
    Series::unpack(a.dof(), t.key, m, k);
    if (!Series::canonical(a.dof(), k)) continue;
    double kw = 0.0;
    for (int j = 0; j < a.dof(); ++j) kw += k[j] * omega[j];
    if (kw == 0.0) continue;
    out.add_key(t.key, Complex(0.0, kw) * t.c);
  }
  return out.finish();
}

namespace {

template <class Keep>
Split split_by(const Series& a, int kept_d, int kept_K, Keep keep) {
  Series::Builder kept(a.dof(), kept_d, kept_K);
  Series::Builder tail(a.dof(), a.degree_cap(), a.fourier_cap());
  int m[kMaxDof], k[kMaxDof];
  for (const auto& t : a.terms()) {
    Series::unpack(a.dof(), t.key, m, k);
    if (!Series::canonical(a.dof(), k)) continue;
    if (keep(m, k, t.c))
      kept.add_key(t.key, t.c);
    else
      tail.add_key(t.key, t.c);
  }
  return {kept.finish(), tail.finish()};
}

}  // namespace

Split truncate_fourier(const Series& a, int K) {
  if (K < 0) throw InvalidInput("Fourier cutoff must be nonnegative");
  const int n = a.dof();
  return split_by(a, a.degree_cap(), std::min(K, a.fourier_cap()),
                  [&](const int*, const int* k, Complex) { return l1(k, n) <= K; });
}

Split truncate_taylor(const Series& a, int d) {
  if (d < 0) throw InvalidInput("Taylor cutoff must be nonnegative");
  const int n = a.dof();
  return split_by(a, std::min(d, a.degree_cap()), a.fourier_cap(), [&](const int* m, const int*, Complex) {
    int s = 0;
    for (int j = 0; j < n; ++j) s += m[j];
    return s <= d;
  });
}

Split prune(const Series& a, const DomainSpec& dom, double tol) {
  const int n = a.dof();
  return split_by(a, a.degree_cap(), a.fourier_cap(), [&](const int* m, const int* k, Complex c) {
    int dm = 0;
    for (int j = 0; j < n; ++j) dm += m[j];
    return std::abs(c) * std::pow(dom.r, dm) * std::exp(l1(k, n) * dom.s) >= tol;
  });
}

double majorant_norm(const Series& a, const DomainSpec& dom) {
  const int n = a.dof();
  double sum = 0.0;
  int m[kMaxDof], k[kMaxDof];
  for (const auto& t : a.terms()) {
    Series::unpack(n, t.key, m, k);
    int dm = 0;
    for (int j = 0; j < n; ++j) dm += m[j];
    sum += std::abs(t.c) * std::pow(dom.r, dm) * std::exp(l1(k, n) * dom.s);
  }
  return sum;
}

Complex eval(const Series& a, std::span<const Complex> I, std::span<const Complex> theta) {
  const int n = a.dof();
  if (static_cast<int>(I.size()) != n || static_cast<int>(theta.size()) != n)
    throw DimensionMismatch("evaluation point length");
  Complex sum(0.0, 0.0);
  int m[kMaxDof], k[kMaxDof];
  const Complex i1(0.0, 1.0);
  for (const auto& t : a.terms()) {
    Series::unpack(n, t.key, m, k);
    Complex phase(0.0, 0.0);
    Complex mono(1.0, 0.0);
    for (int j = 0; j < n; ++j) {
      phase += static_cast<double>(k[j]) * theta[j];
      for (int p = 0; p < m[j]; ++p) mono *= I[j];
    }
    sum += t.c * mono * std::exp(i1 * phase);
  }
  return sum;
}

double eval_real(const Series& a, std::span<const double> I, std::span<const double> theta) {
  return CompiledSeries(a).eval1(I, theta);
}

nlohmann::json to_json(const Series& a) {
  nlohmann::json coeffs = nlohmann::json::array();
  int m[kMaxDof], k[kMaxDof];
  for (const auto& t : a.terms()) {
    Series::unpack(a.dof(), t.key, m, k);
    coeffs.push_back({std::vector<int>(m, m + a.dof()), std::vector<int>(k, k + a.dof()),
                      t.c.real(), t.c.imag()});
  }
  return {{"n", a.dof()}, {"d_max", a.degree_cap()}, {"K", a.fourier_cap()}, {"coeffs", coeffs}};
}

Series series_from_json(const nlohmann::json& j) {
  for (const char* key : {"n", "d_max", "K", "coeffs"})
    if (!j.contains(key)) throw InvalidInput(std::string("series JSON missing field '") + key + "'");
  const int n = j.at("n").get<int>();
  Series::Builder b(n, j.at("d_max").get<int>(), j.at("K").get<int>());
  // Each stored pair appears twice (k and -k); accumulate only the canonical one.
  for (const auto& e : j.at("coeffs")) {
    if (!e.is_array() || e.size() != 4) throw InvalidInput("series coefficient must be [m, k, re, im]");
    const auto m = e[0].get<std::vector<int>>();
    const auto k = e[1].get<std::vector<int>>();
    if (static_cast<int>(k.size()) != n || static_cast<int>(m.size()) != n)
      throw InvalidInput("series coefficient index length does not match n");
    if (!Series::canonical(n, k.data())) continue;
    b.add(m, k, Complex(e[2].get<double>(), e[3].get<double>()));
  }
  return b.finish();
}

// ---------------------------------------------------------------------------

CompiledSeries::CompiledSeries(std::span<const Series> list) {
  if (list.empty()) return;
  n_ = list.front().dof();
  outputs_ = static_cast<int>(list.size());
  std::unordered_map<std::uint64_t, std::size_t> slot;
  std::vector<std::uint64_t> keys;
  int m[kMaxDof], k[kMaxDof];
  for (const auto& s : list) {
    if (s.dof() != n_) throw DimensionMismatch("compiled series dof");
    for (const auto& t : s.terms()) {
      Series::unpack(n_, t.key, m, k);
      if (!Series::canonical(n_, k)) continue;
      if (slot.emplace(t.key, keys.size()).second) keys.push_back(t.key);
    }
  }
  std::sort(keys.begin(), keys.end());
  for (std::size_t i = 0; i < keys.size(); ++i) slot[keys[i]] = i;
  m_.resize(keys.size() * n_);
  k_.resize(keys.size() * n_);
  c_.assign(keys.size() * outputs_, Complex(0.0, 0.0));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    Series::unpack(n_, keys[i], &m_[i * n_], &k_[i * n_]);
    for (int j = 0; j < n_; ++j) {
      kmax_ = std::max(kmax_, std::abs(k_[i * n_ + j]));
      dmax_ = std::max(dmax_, m_[i * n_ + j]);
    }
  }
  for (int o = 0; o < outputs_; ++o) {
    for (const auto& t : list[o].terms()) {
      Series::unpack(n_, t.key, m, k);
      if (!Series::canonical(n_, k)) continue;
      const bool zero = l1(k, n_) == 0;
      c_[slot[t.key] * outputs_ + o] = zero ? t.c : 2.0 * t.c;
    }
  }
  table_.resize(static_cast<std::size_t>(n_) * (2 * kmax_ + 1));
  powers_.resize(static_cast<std::size_t>(n_) * (dmax_ + 1));
}

void CompiledSeries::eval(std::span<const double> I, std::span<const double> theta,
                          std::span<double> out) const {
  const int width = 2 * kmax_ + 1;
  for (int j = 0; j < n_; ++j) {
    Complex* row = &table_[j * width + kmax_];
    row[0] = 1.0;
    for (int q = 1; q <= kmax_; ++q) {
      // direct evaluation keeps rounding independent of q
      row[q] = std::polar(1.0, q * theta[j]);
      row[-q] = std::conj(row[q]);
    }
    double* pw = &powers_[j * (dmax_ + 1)];
    pw[0] = 1.0;
    for (int q = 1; q <= dmax_; ++q) pw[q] = pw[q - 1] * I[j];
  }
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t modes = c_.size() / (outputs_ ? outputs_ : 1);
  for (std::size_t i = 0; i < modes; ++i) {
    Complex z(1.0, 0.0);
    double mono = 1.0;
    for (int j = 0; j < n_; ++j) {
      z *= table_[j * width + kmax_ + k_[i * n_ + j]];
      mono *= powers_[j * (dmax_ + 1) + m_[i * n_ + j]];
    }
    const Complex* c = &c_[i * outputs_];
    for (int o = 0; o < outputs_; ++o) out[o] += mono * (c[o].real() * z.real() - c[o].imag() * z.imag());
  }
}

double CompiledSeries::eval1(std::span<const double> I, std::span<const double> theta) const {
  if (outputs_ == 0) return 0.0;
  double v[1];
  eval(I, theta, std::span<double>(v, 1));
  return v[0];
}

}  // namespace kam
