#include "kam/flow.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "kam/errors.hpp"
#include "kam/parallel.hpp"

namespace kam {

FlowField::FlowField(const Series& F) : n_(F.dof()) {
  if (F.taylor_degree() > 1) throw NonAffineInput(F.taylor_degree());
  const int n = n_;
  const Series b = truncate_taylor(F, 0).kept;
  std::vector<Series> first, second;
  std::vector<Series> a(n), bj(n);
  for (int i = 0; i < n; ++i) a[i] = partial_I(F, i);
  for (int j = 0; j < n; ++j) bj[j] = partial_theta(b, j);
  for (int i = 0; i < n; ++i) first.push_back(a[i]);
  for (int j = 0; j < n; ++j) first.push_back(bj[j]);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) first.push_back(partial_theta(a[i], j));
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) second.push_back(partial_theta(bj[j], l));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Series aij = partial_theta(a[i], j);
      for (int l = 0; l < n; ++l) second.push_back(partial_theta(aij, l));
    }
  first_ = CompiledSeries(first);
  second_ = CompiledSeries(second);
  v1_.resize(first.size());
  v2_.resize(second.size());
}

void FlowField::rhs(const double* y, double* dy) const {
  const int n = n_;
  const double zero[kMaxDof] = {0, 0, 0, 0};
  first_.eval(std::span<const double>(zero, n), std::span<const double>(y + n, n), v1_);
  const double* a = v1_.data();
  const double* bj = a + n;
  const double* aij = bj + n;
  for (int j = 0; j < n; ++j) {
    double s = bj[j];
    for (int i = 0; i < n; ++i) s += y[i] * aij[i * n + j];
    dy[j] = -s;
    dy[n + j] = a[j];
  }
}

void FlowField::jacobian(const double* y, double* A) const {
  const int n = n_, d = 2 * n_;
  const double zero[kMaxDof] = {0, 0, 0, 0};
  first_.eval(std::span<const double>(zero, n), std::span<const double>(y + n, n), v1_);
  second_.eval(std::span<const double>(zero, n), std::span<const double>(y + n, n), v2_);
  const double* aij = v1_.data() + 2 * n;
  const double* bjl = v2_.data();
  const double* aijl = bjl + n * n;
  std::fill(A, A + d * d, 0.0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) A[j * d + i] = -aij[i * n + j];
    for (int l = 0; l < n; ++l) {
      double s = bjl[j * n + l];
      for (int i = 0; i < n; ++i) s += y[i] * aijl[(i * n + j) * n + l];
      A[j * d + n + l] = -s;
    }
  }
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l) A[(n + i) * d + n + l] = aij[i * n + l];
}

namespace {

struct System {
  const FlowField& f;
  bool variational;
  int d;
  mutable std::vector<double> A;

  std::size_t size() const { return variational ? d + d * d : d; }

  void operator()(const double* z, double* dz) const {
    f.rhs(z, dz);
    if (!variational) return;
    f.jacobian(z, A.data());
    const double* Y = z + d;
    double* dY = dz + d;
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        double s = 0.0;
        for (int q = 0; q < d; ++q) s += A[r * d + q] * Y[q * d + c];
        dY[r * d + c] = s;
      }
  }
};

void rk4(const System& sys, const std::vector<double>& z, double h, std::vector<double>& out,
         std::vector<double>* work) {
  const std::size_t m = z.size();
  auto& k1 = work[0];
  auto& k2 = work[1];
  auto& k3 = work[2];
  auto& k4 = work[3];
  auto& tmp = work[4];
  sys(z.data(), k1.data());
  for (std::size_t i = 0; i < m; ++i) tmp[i] = z[i] + 0.5 * h * k1[i];
  sys(tmp.data(), k2.data());
  for (std::size_t i = 0; i < m; ++i) tmp[i] = z[i] + 0.5 * h * k2[i];
  sys(tmp.data(), k3.data());
  for (std::size_t i = 0; i < m; ++i) tmp[i] = z[i] + h * k3[i];
  sys(tmp.data(), k4.data());
  out.resize(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace

void flow_time1(const FlowField& f, std::span<double> y, const IntegratorOptions& opt, int record,
                std::vector<double>* jac) {
  const int d = 2 * f.dof();
  if (static_cast<int>(y.size()) != d) throw DimensionMismatch("flow state length");
  System sys{f, jac != nullptr, d, std::vector<double>(d * d)};
  std::vector<double> z(sys.size(), 0.0);
  std::copy(y.begin(), y.end(), z.begin());
  if (jac)
    for (int i = 0; i < d; ++i) z[d + i * d + i] = 1.0;
  std::vector<double> work[5];
  for (auto& w : work) w.resize(z.size());
  std::vector<double> full, half, twice;
  double t = 0.0, h = opt.h0;
  int steps = 0;
  while (t < 1.0) {
    if (++steps > opt.max_steps) throw IntegratorFailure(record, "step budget exhausted");
    const bool last = t + h >= 1.0;
    const double hs = last ? 1.0 - t : h;
    rk4(sys, z, hs, full, work);
    rk4(sys, z, 0.5 * hs, half, work);
    rk4(sys, half, 0.5 * hs, twice, work);
    double err = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      err = std::max(err, std::abs(twice[i] - full[i]) / 15.0);
      scale = std::max(scale, std::abs(twice[i]));
    }
    if (!std::isfinite(err)) throw IntegratorFailure(record, "non-finite state");
    if (err <= opt.tol * scale) {
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = twice[i] + (twice[i] - full[i]) / 15.0;
      t = last ? 1.0 : t + hs;
      const double grow = err > 0.0 ? 0.9 * std::pow(opt.tol * scale / err, 0.2) : 2.0;
      h = hs * std::min(2.0, std::max(1.0, grow));
    } else {
      h = hs * std::max(0.1, 0.9 * std::pow(opt.tol * scale / err, 0.2));
      if (h < opt.h_min) throw IntegratorFailure(record, "step size below minimum");
    }
  }
  std::copy(z.begin(), z.begin() + d, y.begin());
  if (jac) jac->assign(z.begin() + d, z.end());
}

// ---------------------------------------------------------------------------

bool Embedding::trivial() const {
  for (const auto* set : {&U, &V_off})
    for (const auto& c : *set)
      for (const auto& z : c)
        if (z != Complex(0.0, 0.0)) return false;
  return true;
}

nlohmann::json Embedding::to_json(double chop) const {
  // one entry per retained mode: [k..., re, im]; k in the symmetric range
  auto encode = [&](const std::vector<Complex>& c) {
    nlohmann::json arr = nlohmann::json::array();
    const std::size_t total = c.size();
    for (std::size_t g = 0; g < total; ++g) {
      if (std::abs(c[g]) <= chop) continue;
      nlohmann::json e = nlohmann::json::array();
      std::size_t rem = g;
      std::vector<int> k(n);
      for (int j = n - 1; j >= 0; --j) {
        const int q = static_cast<int>(rem % N);
        rem /= N;
        k[j] = q <= N / 2 ? q : q - N;
      }
      for (int kj : k) e.push_back(kj);
      e.push_back(c[g].real());
      e.push_back(c[g].imag());
      arr.push_back(e);
    }
    return arr;
  };
  nlohmann::json u = nlohmann::json::array(), v = nlohmann::json::array();
  for (const auto& c : U) u.push_back(encode(c));
  for (const auto& c : V_off) v.push_back(encode(c));
  return {{"n", n}, {"grid", N}, {"U", u}, {"V_minus_theta", v}};
}

void grid_point(std::size_t g, int n, int N, double* theta) {
  for (int j = n - 1; j >= 0; --j) {
    theta[j] = 2.0 * M_PI * static_cast<double>(g % N) / N;
    g /= N;
  }
}

namespace {

std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

void run_dft(std::vector<Complex>& data, int n, int N, int sign) {
  std::vector<int> dims(n, N);
  fftw_complex* buf = reinterpret_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * data.size()));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft(n, dims.data(), buf, buf, sign, FFTW_ESTIMATE);
  }
  std::copy(data.begin(), data.end(), reinterpret_cast<Complex*>(buf));
  fftw_execute(plan);
  std::copy(reinterpret_cast<Complex*>(buf), reinterpret_cast<Complex*>(buf) + data.size(), data.begin());
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
}

std::size_t grid_size(int n, int N) {
  std::size_t s = 1;
  for (int j = 0; j < n; ++j) s *= static_cast<std::size_t>(N);
  return s;
}

}  // namespace

std::vector<Complex> fft_forward(const std::vector<double>& values, int n, int N) {
  const std::size_t total = grid_size(n, N);
  if (values.size() != total) throw DimensionMismatch("grid values size");
  std::vector<Complex> data(values.begin(), values.end());
  run_dft(data, n, N, FFTW_FORWARD);
  const double norm = 1.0 / static_cast<double>(total);
  for (auto& z : data) z *= norm;
  return data;
}

std::vector<double> fft_inverse_real(const std::vector<Complex>& coeffs, int n, int N) {
  std::vector<Complex> data = coeffs;
  run_dft(data, n, N, FFTW_BACKWARD);
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i].real();
  return out;
}

std::vector<double> spectral_derivative(const std::vector<Complex>& coeffs, int n, int N,
                                        std::span<const double> dir) {
  std::vector<Complex> d(coeffs.size());
  for (std::size_t g = 0; g < coeffs.size(); ++g) {
    std::size_t rem = g;
    double kw = 0.0;
    bool nyquist = false;
    for (int j = n - 1; j >= 0; --j) {
      const int q = static_cast<int>(rem % N);
      rem /= N;
      if (N % 2 == 0 && q == N / 2) nyquist = true;
      const int k = q < N / 2 ? q : q - N;
      kw += k * dir[j];
    }
    d[g] = nyquist ? Complex(0.0, 0.0) : Complex(0.0, kw) * coeffs[g];
  }
  return fft_inverse_real(d, n, N);
}

Embedding embed_torus(const std::vector<TransformRecord>& records, int n, int N,
                      const IntegratorOptions& opt) {
  if (n < 1 || n > kMaxDof) throw InvalidInput("embedding dof out of range");
  if (N < 4) throw InvalidInput("embedding grid needs at least 4 points per angle");
  const std::size_t total = grid_size(n, N);
  Embedding emb;
  emb.n = n;
  emb.N = N;
  std::vector<FlowField> fields;
  for (const auto& r : records) {
    if (r.F.dof() != n) throw DimensionMismatch("record dof");
    fields.emplace_back(r.F);
  }
  std::vector<std::vector<double>> U(n, std::vector<double>(total, 0.0));
  std::vector<std::vector<double>> V(n, std::vector<double>(total, 0.0));
  const std::size_t blocks = std::min<std::size_t>(total, 64);
  const std::size_t per = (total + blocks - 1) / blocks;
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<FlowField> local = fields;  // evaluation scratch is per copy
    std::vector<double> y(2 * n);
    double theta[kMaxDof];
    for (std::size_t g = b * per; g < std::min(total, (b + 1) * per); ++g) {
      grid_point(g, n, N, theta);
      std::fill(y.begin(), y.end(), 0.0);
      std::copy(theta, theta + n, y.begin() + n);
      for (int r = static_cast<int>(local.size()) - 1; r >= 0; --r) flow_time1(local[r], y, opt, r);
      for (int j = 0; j < n; ++j) {
        U[j][g] = y[j];
        V[j][g] = y[n + j] - theta[j];
      }
    }
  });
  for (int j = 0; j < n; ++j) {
    emb.U.push_back(fft_forward(U[j], n, N));
    emb.V_off.push_back(fft_forward(V[j], n, N));
  }
  return emb;
}

}  // namespace kam
