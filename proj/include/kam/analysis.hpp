#pragma once

// Cauchy and Fourier estimates, inverse maps, Lipschitz extension.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "kam/series.hpp"

namespace kam {

/// |f_z|_{r-rho} <= |f|_r / rho.
double cauchy_bound(double f_norm_r, double rho);

struct DecayCheck {
  bool ok = true;
  std::vector<int> worst_m;
  std::vector<int> worst_k;
  /// max over modes of |v_k| e^{|k| s} / |v|_s
  double worst_ratio = 0.0;
  double sup_norm = 0.0;
};

/// Checks |v_k| <= |v|_s e^{-|k| s} for every stored mode. |v|_s is the
/// majorant at (r = 1, s) unless a sup-norm is supplied.
DecayCheck fourier_decay_check(const Series& v, double s, std::optional<double> sup_norm = {});

/// Sampled sup of |v| over real I = 0 and the strip corners Im theta_j = +-s,
/// on a grid with `points` nodes per angle.
double strip_sup_sampled(const Series& v, double s, int points = 64);

/// C(n) in |v - T_K v|_{s-sigma} <= C K^n e^{-K sigma} |v|_s, valid for K sigma >= 1.
double truncation_constant(int n);
double truncation_bound(double v_norm_s, int K, double sigma, int n);

/// c(n, tau) with sum_{k != 0} |k|^tau e^{-|k| sigma} <= c sigma^{-tau-n}.
double lemma1_constant(int n, double tau);

using VectorMap = std::function<std::vector<double>(std::span<const double>)>;

struct NewtonOptions {
  int max_iter = 60;
  double tol = 1e-14;      // on the sup-norm of the residual
  double fd_step = 1e-7;   // relative finite-difference step for the Jacobian
  double max_step = 0.0;   // 0 = unlimited; else caps the sup-norm of each update
};

struct NewtonResult {
  std::vector<double> x;
  double residual = 0.0;
  int iterations = 0;
};

/// Damped Newton for f(x) = target with a forward-difference Jacobian.
/// Throws NewtonFail when the residual does not reach tol.
NewtonResult newton_solve(const VectorMap& f, std::span<const double> target,
                          std::span<const double> seed, const NewtonOptions& opt = {});

/// Central-difference Jacobian, row-major n x n.
std::vector<double> fd_jacobian(const VectorMap& f, std::span<const double> x, double step);

struct InverseResult {
  VectorMap phi;
  double phi_minus_id = 0.0;   // sup over samples of |phi(w) - w|_inf
  double dphi_minus_id = 0.0;  // sup over samples of the max-row-sum norm
  double round_trip = 0.0;     // sup over samples of |f(phi(w)) - w|_inf
};

/// Inverse of f = id + O(delta) on the parameter ball, measured on `samples`.
/// PreconditionFail if delta > h/4; NewtonFail if |f - id| > delta at a sample.
InverseResult analytic_inverse(VectorMap f, double delta, double h,
                               const std::vector<std::vector<double>>& samples,
                               const NewtonOptions& opt = {});

enum class NormKind { Sup, Euclidean, L1 };

double vector_norm(std::span<const double> x, NormKind kind);

struct SampledFunction {
  std::vector<std::vector<double>> x;
  std::vector<double> u;
  std::optional<double> lambda;
};

class LipschitzExtension {
 public:
  LipschitzExtension(SampledFunction sf, NormKind norm = NormKind::Sup);
  double operator()(std::span<const double> x) const;
  double lambda() const { return lambda_; }

 private:
  SampledFunction sf_;
  NormKind norm_;
  double lambda_;
};

/// U(x) = max_i (u_i - lambda |x - x_i|); lambda defaults to the largest
/// difference quotient over sample pairs.
LipschitzExtension lipschitz_extend(SampledFunction sf, NormKind norm = NormKind::Sup);

}  // namespace kam
