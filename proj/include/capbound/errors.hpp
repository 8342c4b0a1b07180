#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace capbound {

/// Base of every error the toolkit raises. `name()` is the stable identifier
/// surfaced in CLI messages.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

#define CAPBOUND_DEFINE_ERROR(Type)                                      \
  class Type : public Error {                                            \
   public:                                                               \
    explicit Type(const std::string& what) : Error(#Type, what) {}       \
  }

// Input/contract violations (CLI exit status 2).
CAPBOUND_DEFINE_ERROR(PreconditionError);
CAPBOUND_DEFINE_ERROR(ValidationError);
CAPBOUND_DEFINE_ERROR(UnresolvedFeature);
CAPBOUND_DEFINE_ERROR(EmptyPlate);
CAPBOUND_DEFINE_ERROR(CurveEscapesDomain);
CAPBOUND_DEFINE_ERROR(SelfIntersecting);
CAPBOUND_DEFINE_ERROR(OutsideSource);
CAPBOUND_DEFINE_ERROR(TooLarge);

// Numerical failures (CLI exit status 3).
CAPBOUND_DEFINE_ERROR(UnreachablePair);
CAPBOUND_DEFINE_ERROR(InfiniteEnergy);
CAPBOUND_DEFINE_ERROR(BudgetExceeded);

#undef CAPBOUND_DEFINE_ERROR

/// Iterative solve ran out of iterations; the best iterate is kept.
class NoConvergence : public Error {
 public:
  NoConvergence(int max_iterations, double residual, Eigen::VectorXd best)
      : Error("NoConvergence", "no convergence after " + std::to_string(max_iterations) +
                                   " iterations (residual " + std::to_string(residual) + ")"),
        max_iterations(max_iterations),
        residual(residual),
        best_iterate(std::move(best)) {}
  int max_iterations;
  double residual;
  Eigen::VectorXd best_iterate;
};

inline bool is_numerical_failure(const Error& e) {
  return e.name() == "NoConvergence" || e.name() == "UnreachablePair" ||
         e.name() == "InfiniteEnergy" || e.name() == "BudgetExceeded";
}

}  // namespace capbound
