#include "kam/classical.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>

#include "kam/analysis.hpp"
#include "kam/errors.hpp"
#include "kam/flow.hpp"

namespace kam {

namespace {

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

double binom(int a, int b) {
  double r = 1.0;
  for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
  return r;
}

int total(const std::vector<int>& m) {
  int s = 0;
  for (int v : m) s += v;
  return s;
}

}  // namespace

Polynomial::Polynomial(int n, std::vector<Monomial> terms) : n_(n), terms_(std::move(terms)) {
  if (n < 1 || n > kMaxDof) throw InvalidInput("polynomial dof out of range");
  for (const auto& t : terms_) {
    if (static_cast<int>(t.m.size()) != n) throw InvalidInput("monomial exponent length does not match n");
    for (int e : t.m)
      if (e < 0 || e > kMaxDegree) throw InvalidInput("monomial exponent out of range");
  }
}

Polynomial Polynomial::quadratic(int n, std::span<const double> A) {
  if (static_cast<int>(A.size()) != n * n) throw InvalidInput("quadratic h needs an n x n matrix A");
  std::vector<Monomial> t;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      std::vector<int> m(n, 0);
      ++m[i];
      ++m[j];
      const double c = i == j ? 0.5 * A[i * n + i] : 0.5 * (A[i * n + j] + A[j * n + i]);
      if (c != 0.0) t.push_back({m, c});
    }
  return Polynomial(n, std::move(t));
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& t : terms_) d = std::max(d, total(t.m));
  return d;
}

double Polynomial::value(std::span<const double> p) const {
  double s = 0.0;
  for (const auto& t : terms_) {
    double v = t.c;
    for (int j = 0; j < n_; ++j) v *= ipow(p[j], t.m[j]);
    s += v;
  }
  return s;
}

void Polynomial::gradient(std::span<const double> p, double* g) const {
  std::fill(g, g + n_, 0.0);
  for (const auto& t : terms_)
    for (int a = 0; a < n_; ++a) {
      if (t.m[a] == 0) continue;
      double v = t.c * t.m[a];
      for (int j = 0; j < n_; ++j) v *= ipow(p[j], t.m[j] - (j == a ? 1 : 0));
      g[a] += v;
    }
}

void Polynomial::hessian(std::span<const double> p, double* H) const {
  std::fill(H, H + n_ * n_, 0.0);
  for (const auto& t : terms_)
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b) {
        std::vector<int> e = t.m;
        double v = t.c;
        if (e[a] == 0) continue;
        v *= e[a]--;
        if (e[b] == 0) continue;
        v *= e[b]--;
        for (int j = 0; j < n_; ++j) v *= ipow(p[j], e[j]);
        H[a * n_ + b] += v;
      }
}

std::vector<Monomial> Polynomial::shifted(std::span<const double> p0) const {
  std::map<std::vector<int>, double> acc;
  for (const auto& t : terms_) {
    // prod_j (p0_j + I_j)^{m_j} = prod_j sum_{e_j <= m_j} C(m_j, e_j) p0_j^{m_j - e_j} I_j^{e_j}
    std::vector<int> e(n_, 0);
    while (true) {
      double v = t.c;
      for (int j = 0; j < n_; ++j) v *= binom(t.m[j], e[j]) * ipow(p0[j], t.m[j] - e[j]);
      acc[e] += v;
      int j = n_ - 1;
      while (j >= 0 && e[j] == t.m[j]) e[j--] = 0;
      if (j < 0) break;
      ++e[j];
    }
  }
  std::vector<Monomial> out;
  for (const auto& [m, c] : acc)
    if (c != 0.0) out.push_back({m, c});
  return out;
}

double ClassicalProblem::f_value(std::span<const double> p, std::span<const double> q) const {
  double s = 0.0;
  for (const auto& t : f) {
    double mono = 1.0, phase = 0.0;
    for (int j = 0; j < n; ++j) {
      mono *= ipow(p[j], t.m[j]);
      phase += t.k[j] * q[j];
    }
    s += mono * (t.a * std::cos(phase) + t.b * std::sin(phase));
  }
  return s;
}

int ClassicalProblem::f_degree() const {
  int d = 0;
  for (const auto& t : f) d = std::max(d, total(t.m));
  return d;
}

ClassicalProblem make_classical(int n, Polynomial h, std::vector<FourierTerm> f, double epsilon,
                                FrequencyBox domain, double M, double F_bound) {
  ClassicalProblem prob;
  prob.n = n;
  if (h.dof() != n) throw InvalidInput("h dof does not match n");
  domain.validate();
  if (domain.dim() != n) throw InvalidInput("domain dimension does not match n");
  if (!(epsilon >= 0.0)) throw InvalidInput("epsilon must be nonnegative");
  for (const auto& t : f)
    if (static_cast<int>(t.m.size()) != n || static_cast<int>(t.k.size()) != n)
      throw InvalidInput("f term index length does not match n");
  prob.h = std::move(h);
  prob.f = std::move(f);
  prob.epsilon = epsilon;
  prob.domain = std::move(domain);

  // sample the box on a 5^n lattice for the Hessian bound and the twist check
  const int pts = 5;
  std::vector<int> idx(n, 0);
  std::vector<double> p(n), H(n * n);
  double hess_sup = 0.0;
  while (true) {
    for (int j = 0; j < n; ++j)
      p[j] = prob.domain.lo[j] + (prob.domain.hi[j] - prob.domain.lo[j]) * idx[j] / (pts - 1);
    prob.h.hessian(p, H.data());
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Hm(H.data(), n, n);
    if (std::abs(Hm.determinant()) < 1e-12) throw InvalidInput("h is degenerate: det h_pp vanishes at a sample point");
    for (int a = 0; a < n; ++a) {
      double row = 0.0;
      for (int b = 0; b < n; ++b) row += std::abs(H[a * n + b]);
      hess_sup = std::max(hess_sup, row);
    }
    int j = n - 1;
    while (j >= 0 && idx[j] == pts - 1) idx[j--] = 0;
    if (j < 0) break;
    ++idx[j];
  }
  prob.M = M > 0.0 ? M : hess_sup;
  if (F_bound > 0.0) {
    prob.F_bound = F_bound;
  } else {
    double fb = 0.0;
    for (const auto& t : prob.f) {
      double mono = std::abs(t.a) + std::abs(t.b);
      for (int j = 0; j < n; ++j)
        mono *= ipow(std::max(std::abs(prob.domain.lo[j]), std::abs(prob.domain.hi[j])), t.m[j]);
      fb += mono;
    }
    prob.F_bound = fb;
  }
  return prob;
}

ClassicalSetup setup_classical(const ClassicalProblem& prob, std::span<const double> omega,
                               const ExpansionOptions& opt) {
  const int n = prob.n;
  if (static_cast<int>(omega.size()) != n) throw DimensionMismatch("omega length vs problem dof");
  if (opt.d_max < 1 || opt.d_max > kMaxDegree) throw InvalidInput("expansion d_max out of range");
  if (opt.grid < 4 || opt.grid % 2) throw InvalidInput("expansion grid must be even and >= 4");
  ClassicalSetup out;

  // p0 = h_p^{-1}(omega), seeded at the box center
  const VectorMap grad = [&](std::span<const double> p) {
    std::vector<double> g(n);
    prob.h.gradient(p, g.data());
    return g;
  };
  std::vector<double> seed(n);
  for (int j = 0; j < n; ++j) seed[j] = 0.5 * (prob.domain.lo[j] + prob.domain.hi[j]);
  NewtonOptions no;
  no.tol = 1e-13;
  no.max_iter = 100;
  try {
    out.p0 = newton_solve(grad, omega, seed, no).x;
  } catch (const NewtonFail& e) {
    throw NewtonFail(std::string("frequency outside the range of h_p: ") + e.what());
  }
  for (int j = 0; j < n; ++j)
    if (out.p0[j] < prob.domain.lo[j] || out.p0[j] > prob.domain.hi[j])
      throw NewtonFail("h_p^{-1}(omega) lies outside the action domain");
  {
    const auto g = grad(out.p0);
    for (int j = 0; j < n; ++j) out.frequency_error = std::max(out.frequency_error, std::abs(g[j] - omega[j]));
  }

  out.r_auto = prob.epsilon > 0.0 ? std::sqrt(prob.F_bound * prob.epsilon / prob.M) : 1.0;

  // h(p0 + I) = e + <omega, I> + P_h(I)
  Series::Builder Ph(n, opt.d_max, opt.K);
  const std::vector<int> zero(n, 0);
  for (const auto& t : prob.h.shifted(out.p0)) {
    const int d = total(t.m);
    if (d == 0) {
      out.N0.e = t.c;
    } else if (d == 1) {
      // linear part is omega up to the Newton residual
    } else if (d <= opt.d_max) {
      Ph.add(t.m, zero, t.c);
    } else {
      out.taylor_dropped += std::abs(t.c) * ipow(out.r_auto, d);
    }
  }
  out.N0.omega.assign(omega.begin(), omega.end());
  Series P = Ph.finish();

  if (prob.epsilon > 0.0 && !prob.f.empty()) {
    // collocation in I on the lattice {t >= 0, |t|_1 <= d} * rho
    const int d = opt.d_max;
    const double rho = prob.f_degree() <= d ? 1.0 : 0.05;
    std::vector<std::vector<int>> lattice;
    {
      std::vector<int> t(n, 0);
      while (true) {
        if (total(t) <= d) lattice.push_back(t);
        int j = n - 1;
        while (j >= 0 && t[j] == d) t[j--] = 0;
        if (j < 0) break;
        ++t[j];
      }
    }
    const int L = static_cast<int>(lattice.size());
    Eigen::MatrixXd Vm(L, L);
    for (int a = 0; a < L; ++a)
      for (int b = 0; b < L; ++b) {
        double v = 1.0;
        for (int j = 0; j < n; ++j) v *= ipow(rho * lattice[a][j], lattice[b][j]);
        Vm(a, b) = v;
      }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Vm);

    const int N = opt.grid;
    std::size_t G = 1;
    for (int j = 0; j < n; ++j) G *= N;
    std::vector<std::vector<Complex>> coeff(L);
    std::vector<double> vals(G), p(n), q(n);
    for (int a = 0; a < L; ++a) {
      for (int j = 0; j < n; ++j) p[j] = out.p0[j] + rho * lattice[a][j];
      for (std::size_t g = 0; g < G; ++g) {
        grid_point(g, n, N, q.data());
        vals[g] = prob.epsilon * prob.f_value(p, q);
      }
      coeff[a] = fft_forward(vals, n, N);
    }
    // solve the Vandermonde system per Fourier mode
    std::vector<std::pair<std::vector<int>, std::vector<Complex>>> modes;
    double biggest = 0.0;
    Eigen::VectorXcd rhs(L);
    for (std::size_t g = 0; g < G; ++g) {
      std::vector<int> k(n);
      std::size_t rem = g;
      bool nyquist = false;
      int k1 = 0;
      for (int j = n - 1; j >= 0; --j) {
        const int qi = static_cast<int>(rem % N);
        rem /= N;
        if (qi == N / 2) nyquist = true;
        k[j] = qi < N / 2 ? qi : qi - N;
        k1 += std::abs(k[j]);
      }
      if (nyquist || k1 > opt.K || !Series::canonical(n, k.data())) continue;
      for (int a = 0; a < L; ++a) rhs(a) = coeff[a][g];
      Eigen::VectorXcd sol = lu.solve(rhs);
      std::vector<Complex> c(L);
      for (int b = 0; b < L; ++b) {
        c[b] = sol(b);
        biggest = std::max(biggest, std::abs(c[b]));
      }
      modes.emplace_back(std::move(k), std::move(c));
    }
    Series::Builder Pe(n, opt.d_max, opt.K);
    for (const auto& [k, c] : modes)
      for (int b = 0; b < L; ++b)
        if (std::abs(c[b]) > opt.chop * biggest) {
          Complex v = c[b];
          if (std::all_of(k.begin(), k.end(), [](int x) { return x == 0; })) v = Complex(v.real(), 0.0);
          Pe.add(lattice[b], k, v);
        }
    const Series Peps = Pe.finish();

    // aliasing check on the half-shifted grid at I = 0 and at the collocation points
    CompiledSeries cs(Peps);
    double worst = 0.0, scale = 0.0;
    std::vector<double> I(n);
    for (int a = 0; a < L; ++a) {
      for (int j = 0; j < n; ++j) {
        I[j] = rho * lattice[a][j];
        p[j] = out.p0[j] + I[j];
      }
      for (std::size_t g = 0; g < G; ++g) {
        grid_point(g, n, N, q.data());
        for (int j = 0; j < n; ++j) q[j] += M_PI / N;
        const double exact = prob.epsilon * prob.f_value(p, q);
        worst = std::max(worst, std::abs(cs.eval1(I, q) - exact));
        scale = std::max(scale, std::abs(exact));
      }
    }
    out.expansion_residual = worst;
    if (worst > opt.alias_tol * std::max(scale, prob.epsilon)) throw SpectralAliasing(worst);
    P = P + Peps;
  }
  out.P0 = P.with_caps(opt.d_max, opt.K);
  return out;
}

double epsilon_threshold(const ClassicalProblem& prob, double alpha, double s, double nu, double gamma) {
  if (!(prob.M > 0.0) || !(prob.F_bound > 0.0)) throw InvalidInput("threshold needs M, F > 0");
  return gamma * gamma * alpha * alpha * std::pow(s, 2.0 * nu) / (4.0 * prob.F_bound * prob.M);
}

HamiltonianFn classical_hamiltonian(const ClassicalProblem& prob, std::span<const double> p0) {
  std::vector<double> base(p0.begin(), p0.end());
  return [prob, base](std::span<const double> I, std::span<const double> theta) {
    double p[kMaxDof];
    for (std::size_t j = 0; j < base.size(); ++j) p[j] = base[j] + I[j];
    const std::span<const double> ps(p, base.size());
    return prob.h.value(ps) + prob.epsilon * prob.f_value(ps, theta);
  };
}

}  // namespace kam
