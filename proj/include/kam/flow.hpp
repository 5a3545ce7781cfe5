#pragma once

// Time-1 maps of affine generators and the torus embedding on a theta-grid.

#include <span>
#include <vector>

#include "kam/kamstep.hpp"
#include "kam/series.hpp"

namespace kam {

struct IntegratorOptions {
  double tol = 1e-14;  // per-step local error, relative to max(1, |y|)
  double h0 = 0.25;
  double h_min = 1e-7;
  int max_steps = 200000;
};

/// Vector field of F = b(theta) + <a(theta), I>:
///   theta' = a(theta),  I' = -grad b - (d_theta a)^T I.
/// Not thread-safe (evaluation scratch); copy per worker.
class FlowField {
 public:
  FlowField() = default;
  explicit FlowField(const Series& F);

  int dof() const { return n_; }
  /// y = (I, theta), 2n entries.
  void rhs(const double* y, double* dy) const;
  /// Field Jacobian A(y), row-major 2n x 2n.
  void jacobian(const double* y, double* A) const;

 private:
  int n_ = 0;
  CompiledSeries first_;   // a_i, d_j b, d_j a_i
  CompiledSeries second_;  // d_j d_l b, d_j d_l a_i
  mutable std::vector<double> v1_, v2_;
};

/// Integrates y over t in [0, 1] with step-doubling RK4. When `jac` is given
/// (2n x 2n, row-major) it receives the Jacobian of the time-1 map.
/// Throws IntegratorFailure(record, ...) when the step size collapses.
void flow_time1(const FlowField& f, std::span<double> y, const IntegratorOptions& opt, int record = -1,
                std::vector<double>* jac = nullptr);

/// Fourier coefficients on an N^n grid (FFTW ordering, normalized by N^n).
struct Embedding {
  int n = 0;
  int N = 0;
  std::vector<std::vector<Complex>> U;      // U_j(0, theta)
  std::vector<std::vector<Complex>> V_off;  // V_j(theta) - theta_j

  bool trivial() const;
  nlohmann::json to_json(double chop = 0.0) const;
};

/// Composes Phi_0 o ... o Phi_{J-1} applied to (0, theta) on the grid.
Embedding embed_torus(const std::vector<TransformRecord>& records, int n, int N,
                      const IntegratorOptions& opt = {});

/// Grid helpers on the N^n lattice theta_g = 2 pi g / N (last index fastest).
std::vector<Complex> fft_forward(const std::vector<double>& values, int n, int N);
std::vector<double> fft_inverse_real(const std::vector<Complex>& coeffs, int n, int N);
/// Real grid values of sum_j dir_j d_{theta_j} f from coefficients of f.
std::vector<double> spectral_derivative(const std::vector<Complex>& coeffs, int n, int N,
                                        std::span<const double> dir);
/// theta coordinates of grid point g.
void grid_point(std::size_t g, int n, int N, double* theta);

}  // namespace kam
