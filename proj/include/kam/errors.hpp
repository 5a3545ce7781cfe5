#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kam {

/// Base class for every domain error raised by the library. `code()` is a
/// stable machine-readable identifier used by the CLI's structured errors.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error("dimension_mismatch", what) {}
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error("invalid_input", what) {}
};

class SmallDivisorViolation : public Error {
 public:
  SmallDivisorViolation(std::vector<int> k, double value, double threshold);
  const std::vector<int>& k() const { return k_; }
  double value() const { return value_; }
  double threshold() const { return threshold_; }

 private:
  std::vector<int> k_;
  double value_;
  double threshold_;
};

class NonAffineInput : public Error {
 public:
  explicit NonAffineInput(int degree)
      : Error("non_affine_input",
              "homological input has Taylor degree " + std::to_string(degree) + " > 1") {}
};

class LieDivergence : public Error {
 public:
  LieDivergence(int order, double ratio)
      : Error("lie_divergence", "Lie series terms fail to contract: order " +
                                    std::to_string(order) + ", ratio " + std::to_string(ratio)),
        order_(order),
        ratio_(ratio) {}
  int order() const { return order_; }
  double ratio() const { return ratio_; }

 private:
  int order_;
  double ratio_;
};

class ConditionViolation : public Error {
 public:
  explicit ConditionViolation(const std::string& what) : Error("condition_violation", what) {}
};

class ScheduleInfeasible : public Error {
 public:
  ScheduleInfeasible(const std::string& inequality, int j)
      : Error("schedule_infeasible",
              "schedule violates " + inequality + " at j = " + std::to_string(j)),
        inequality_(inequality),
        j_(j) {}
  const std::string& inequality() const { return inequality_; }
  int index() const { return j_; }

 private:
  std::string inequality_;
  int j_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(int iterate, const std::string& what)
      : Error("no_convergence", "iterate " + std::to_string(iterate) + ": " + what),
        iterate_(iterate) {}
  int iterate() const { return iterate_; }

 private:
  int iterate_;
};

class OuterNoConvergence : public Error {
 public:
  explicit OuterNoConvergence(const std::string& what) : Error("outer_no_convergence", what) {}
};

class NewtonFail : public Error {
 public:
  explicit NewtonFail(const std::string& what) : Error("newton_fail", what) {}
};

class PreconditionFail : public Error {
 public:
  explicit PreconditionFail(const std::string& what) : Error("precondition_fail", what) {}
};

class KSigmaTooSmall : public Error {
 public:
  explicit KSigmaTooSmall(double k_sigma)
      : Error("k_sigma_too_small",
              "truncation bound needs K*sigma >= 1, got " + std::to_string(k_sigma)) {}
};

class SpectralAliasing : public Error {
 public:
  explicit SpectralAliasing(double residual)
      : Error("spectral_aliasing",
              "grid re-expansion residual " + std::to_string(residual) + " above tolerance") {}
};

class IntegratorFailure : public Error {
 public:
  IntegratorFailure(int record, const std::string& what)
      : Error("integrator_failure", "record " + std::to_string(record) + ": " + what),
        record_(record) {}
  int record() const { return record_; }

 private:
  int record_;
};

class SeriesTooLarge : public Error {
 public:
  explicit SeriesTooLarge(std::size_t terms)
      : Error("series_too_large",
              "series exceeded the term budget (" + std::to_string(terms) + " terms)") {}
};

}  // namespace kam
