#include "kam/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "kam/errors.hpp"

namespace kam {

double cauchy_bound(double f_norm_r, double rho) {
  if (!(rho > 0.0)) throw InvalidInput("Cauchy estimate needs rho > 0");
  return f_norm_r / rho;
}

DecayCheck fourier_decay_check(const Series& v, double s, std::optional<double> sup_norm) {
  if (s < 0.0) throw InvalidInput("strip width must be nonnegative");
  DecayCheck out;
  out.sup_norm = sup_norm ? *sup_norm : majorant_norm(v, {1.0, s, 1.0});
  for (const auto& t : v.terms()) {
    const ModeIndex idx = v.index(t);
    int k1 = 0;
    for (int kj : idx.k) k1 += std::abs(kj);
    const double lhs = std::abs(t.c) * std::exp(k1 * s);
    const double ratio = out.sup_norm > 0.0 ? lhs / out.sup_norm : std::numeric_limits<double>::infinity();
    if (ratio > out.worst_ratio) {
      out.worst_ratio = ratio;
      out.worst_m = idx.m;
      out.worst_k = idx.k;
    }
  }
  // one ulp-scale allowance for the exp/sum rounding of the majorant itself
  out.ok = out.worst_ratio <= 1.0 + 1e-14;
  return out;
}

double strip_sup_sampled(const Series& v, double s, int points) {
  const int n = v.dof();
  if (points < 2) throw InvalidInput("need at least two grid points");
  std::vector<Complex> I(n, 0.0), th(n);
  std::vector<int> idx(n, 0);
  double best = 0.0;
  const int corners = 1 << n;
  while (true) {
    for (int c = 0; c < corners; ++c) {
      for (int j = 0; j < n; ++j) {
        const double im = (c >> j) & 1 ? s : -s;
        th[j] = Complex(2.0 * M_PI * idx[j] / points, im);
      }
      best = std::max(best, std::abs(eval(v, I, th)));
    }
    int j = n - 1;
    while (j >= 0 && idx[j] == points - 1) idx[j--] = 0;
    if (j < 0) break;
    ++idx[j];
  }
  return best;
}

double truncation_constant(int n) {
  // limit of sum_{l>K} 4^n l^{n-1} e^{-(l-K) sigma} / K^n as sigma -> 0+, K sigma = 1:
  // 4^n (n-1)! sum_{j<n} 1/j!. Brute-force scan in fixtures/constants.json.
  if (n < 1 || n > 4) throw InvalidInput("truncation constant tabulated for n <= 4");
  double fact = 1.0, sum = 0.0, jf = 1.0;
  for (int j = 0; j < n; ++j) {
    if (j > 0) jf *= j;
    sum += 1.0 / jf;
  }
  for (int j = 2; j < n; ++j) fact *= j;
  return std::pow(4.0, n) * fact * sum;
}

double truncation_bound(double v_norm_s, int K, double sigma, int n) {
  if (K < 1) throw InvalidInput("K must be >= 1");
  if (K * sigma < 1.0) throw KSigmaTooSmall(K * sigma);
  return truncation_constant(n) * std::pow(static_cast<double>(K), n) * std::exp(-K * sigma) * v_norm_s;
}

namespace {

// number of k in Z^n with |k|_1 = l
double shell_count(int n, long l) {
  double total = 0.0;
  for (int j = 1; j <= std::min<long>(n, l); ++j) {
    double c_nj = 1.0, c_lj = 1.0;
    for (int i = 0; i < j; ++i) c_nj = c_nj * (n - i) / (i + 1);
    for (int i = 0; i < j - 1; ++i) c_lj = c_lj * static_cast<double>(l - 1 - i) / (i + 1);
    total += std::ldexp(c_nj * c_lj, j);
  }
  return total;
}

double bound_profile(int n, double tau, double sigma) {
  const long lmax = static_cast<long>(60.0 / sigma) + 10;
  double s = 0.0;
  for (long l = 1; l <= lmax; ++l)
    s += shell_count(n, l) * std::pow(static_cast<double>(l), tau) * std::exp(-static_cast<double>(l) * sigma);
  return std::pow(sigma, tau + n) * s;
}

}  // namespace

double lemma1_constant(int n, double tau) {
  // sup over sigma > 0 of sigma^{tau+n} sum_{k != 0} |k|^tau e^{-|k| sigma}. The sigma -> 0
  // limit is 2^n Gamma(tau+n)/(n-1)!; for larger tau + n the sup sits at sigma of order tau + n.
  if (n < 1 || n > 4) throw InvalidInput("solver bound constant available for n <= 4 only");
  if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
  static std::mutex mu;
  static std::map<std::pair<int, double>, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  if (const auto it = cache.find({n, tau}); it != cache.end()) return it->second;

  const double limit = std::pow(2.0, n) * std::tgamma(tau + n) / std::tgamma(static_cast<double>(n));
  const int grid = 240;
  const double lo = std::log(0.01), hi = std::log(40.0);
  int best_i = 0;
  double best = 0.0;
  for (int i = 0; i <= grid; ++i) {
    const double v = bound_profile(n, tau, std::exp(lo + (hi - lo) * i / grid));
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  // golden-section refinement in log sigma around the best grid point
  double a = lo + (hi - lo) * std::max(0, best_i - 1) / grid;
  double b = lo + (hi - lo) * std::min(grid, best_i + 1) / grid;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 60; ++it) {
    const double x1 = b - g * (b - a), x2 = a + g * (b - a);
    const double f1 = bound_profile(n, tau, std::exp(x1)), f2 = bound_profile(n, tau, std::exp(x2));
    best = std::max({best, f1, f2});
    if (f1 > f2) {
      b = x2;
    } else {
      a = x1;
    }
  }
  const double c = std::max(best, limit);
  cache[{n, tau}] = c;
  return c;
}

// ---------------------------------------------------------------------------

std::vector<double> fd_jacobian(const VectorMap& f, std::span<const double> x, double step) {
  const std::size_t n = x.size();
  std::vector<double> J(n * n);
  std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
  for (std::size_t c = 0; c < n; ++c) {
    const double hstep = step * std::max(1.0, std::abs(x[c]));
    xp[c] = x[c] + hstep;
    xm[c] = x[c] - hstep;
    const auto fp = f(xp), fm = f(xm);
    for (std::size_t r = 0; r < n; ++r) J[r * n + c] = (fp[r] - fm[r]) / (2.0 * hstep);
    xp[c] = x[c];
    xm[c] = x[c];
  }
  return J;
}

namespace {

double sup_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

NewtonResult newton_solve(const VectorMap& f, std::span<const double> target,
                          std::span<const double> seed, const NewtonOptions& opt) {
  const std::size_t n = seed.size();
  if (target.size() != n) throw DimensionMismatch("Newton target vs seed length");
  NewtonResult res;
  res.x.assign(seed.begin(), seed.end());
  std::vector<double> fx = f(res.x);
  if (fx.size() != n) throw DimensionMismatch("Newton map output length");
  res.residual = sup_diff(fx, target);
  for (int it = 0; it < opt.max_iter && res.residual > opt.tol; ++it) {
    res.iterations = it + 1;
    // forward differences
    Eigen::MatrixXd J(n, n);
    std::vector<double> xp = res.x;
    for (std::size_t c = 0; c < n; ++c) {
      const double hstep = opt.fd_step * std::max(1.0, std::abs(res.x[c]));
      xp[c] = res.x[c] + hstep;
      const auto fp = f(xp);
      for (std::size_t r = 0; r < n; ++r) J(r, c) = (fp[r] - fx[r]) / hstep;
      xp[c] = res.x[c];
    }
    Eigen::VectorXd rhs(n);
    for (std::size_t r = 0; r < n; ++r) rhs(r) = target[r] - fx[r];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) throw NewtonFail("singular Jacobian at Newton iterate " + std::to_string(it));
    Eigen::VectorXd dx = lu.solve(rhs);
    if (opt.max_step > 0.0) {
      const double big = dx.cwiseAbs().maxCoeff();
      if (big > opt.max_step) dx *= opt.max_step / big;
    }
    // backtracking on the residual
    double lam = 1.0;
    bool accepted = false;
    for (int b = 0; b < 30; ++b, lam *= 0.5) {
      std::vector<double> xn(n);
      for (std::size_t r = 0; r < n; ++r) xn[r] = res.x[r] + lam * dx(r);
      auto fn = f(xn);
      const double rn = sup_diff(fn, target);
      if (std::isfinite(rn) && (rn < res.residual || rn <= opt.tol)) {
        res.x = std::move(xn);
        fx = std::move(fn);
        res.residual = rn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (!(res.residual <= opt.tol))
    throw NewtonFail("Newton stalled with residual " + std::to_string(res.residual));
  return res;
}

InverseResult analytic_inverse(VectorMap f, double delta, double h,
                               const std::vector<std::vector<double>>& samples,
                               const NewtonOptions& opt) {
  if (!(delta > 0.0) || !(h > 0.0)) throw InvalidInput("delta and h must be positive");
  if (delta > h / 4.0) throw PreconditionFail("inverse map needs delta <= h/4");
  for (const auto& w : samples) {
    const auto fw = f(w);
    if (sup_diff(fw, w) > delta * (1.0 + 1e-12))
      throw NewtonFail("|f - id| exceeds delta at a sample point");
  }
  InverseResult out;
  const VectorMap fcopy = f;
  const NewtonOptions o = opt;
  out.phi = [fcopy, o](std::span<const double> w) {
    return newton_solve(fcopy, w, w, o).x;
  };
  for (const auto& w : samples) {
    const auto p = out.phi(w);
    out.phi_minus_id = std::max(out.phi_minus_id, sup_diff(p, w));
    out.round_trip = std::max(out.round_trip, sup_diff(f(p), w));
    const auto J = fd_jacobian(out.phi, w, 1e-5);
    const std::size_t n = w.size();
    for (std::size_t r = 0; r < n; ++r) {
      double row = 0.0;
      for (std::size_t c = 0; c < n; ++c) row += std::abs(J[r * n + c] - (r == c ? 1.0 : 0.0));
      out.dphi_minus_id = std::max(out.dphi_minus_id, row);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

double vector_norm(std::span<const double> x, NormKind kind) {
  double acc = 0.0;
  for (double v : x) {
    switch (kind) {
      case NormKind::Sup: acc = std::max(acc, std::abs(v)); break;
      case NormKind::Euclidean: acc += v * v; break;
      case NormKind::L1: acc += std::abs(v); break;
    }
  }
  return kind == NormKind::Euclidean ? std::sqrt(acc) : acc;
}

namespace {

double distance(std::span<const double> a, std::span<const double> b, NormKind kind) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return vector_norm(d, kind);
}

}  // namespace

LipschitzExtension::LipschitzExtension(SampledFunction sf, NormKind norm)
    : sf_(std::move(sf)), norm_(norm), lambda_(0.0) {
  if (sf_.x.empty()) throw InvalidInput("Lipschitz extension needs at least one sample");
  if (sf_.x.size() != sf_.u.size()) throw DimensionMismatch("sample points vs values");
  const std::size_t dim = sf_.x.front().size();
  for (const auto& p : sf_.x)
    if (p.size() != dim) throw DimensionMismatch("sample points differ in dimension");
  double q = 0.0;
  for (std::size_t i = 0; i < sf_.x.size(); ++i)
    for (std::size_t j = i + 1; j < sf_.x.size(); ++j) {
      const double d = distance(sf_.x[i], sf_.x[j], norm_);
      if (d == 0.0) {
        if (sf_.u[i] != sf_.u[j]) throw InvalidInput("repeated sample point with different values");
        continue;
      }
      q = std::max(q, std::abs(sf_.u[i] - sf_.u[j]) / d);
    }
  if (sf_.lambda) {
    if (*sf_.lambda < q) throw InvalidInput("supplied Lipschitz constant is below the data's quotient");
    lambda_ = *sf_.lambda;
  } else {
    // slack of a few ulps so that U(x_i) = u_i survives rounding of lambda*|x_i - x_j|
    lambda_ = q * (1.0 + 1e-14);
  }
}

double LipschitzExtension::operator()(std::span<const double> x) const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sf_.x.size(); ++i)
    best = std::max(best, sf_.u[i] - lambda_ * distance(x, sf_.x[i], norm_));
  return best;
}

LipschitzExtension lipschitz_extend(SampledFunction sf, NormKind norm) {
  return LipschitzExtension(std::move(sf), norm);
}

}  // namespace kam
