#pragma once

#include <stdexcept>
#include <string>

namespace opweight {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPositive : Error {
  explicit NotPositive(const std::string& what, double min_eig = 0.0)
      : Error(what), min_eigenvalue(min_eig) {}
  double min_eigenvalue;
};

struct NotCompletelyPositive : Error {
  explicit NotCompletelyPositive(const std::string& what, double min_eig = 0.0)
      : Error(what), min_eigenvalue(min_eig) {}
  double min_eigenvalue;
};

struct NotAdjointable : Error {
  explicit NotAdjointable(const std::string& what, double res)
      : Error(what), residual(res) {}
  double residual;
};

struct NoRepresentative : Error {
  explicit NoRepresentative(const std::string& what, double res)
      : Error(what), residual(res) {}
  double residual;
};

struct NotInH : Error {
  explicit NotInH(const std::string& what, double res)
      : Error(what), residual(res) {}
  double residual;
};

struct GammaOutOfRange : Error {
  using Error::Error;
};

struct NotDenselyDefined : Error {
  using Error::Error;
};

struct SeedInconsistent : Error {
  explicit SeedInconsistent(const std::string& what, double res = 0.0)
      : Error(what), residual(res) {}
  double residual;
};

struct IllDefined : Error {
  explicit IllDefined(const std::string& what, double res)
      : Error(what), residual(res) {}
  double residual;
};

struct NotSurjective : Error {
  explicit NotSurjective(const std::string& what, int deficit)
      : Error(what), rank_deficit(deficit) {}
  int rank_deficit;
};

struct ZeroLambdaExactMode : Error {
  using Error::Error;
};

struct NotMonotone : Error {
  explicit NotMonotone(const std::string& what, double slack)
      : Error(what), slack(slack) {}
  double slack;
};

struct DominationViolated : Error {
  explicit DominationViolated(const std::string& what, double slack)
      : Error(what), slack(slack) {}
  double slack;
};

struct NotPositiveFunctional : Error {
  explicit NotPositiveFunctional(const std::string& what, double min_eig)
      : Error(what), min_eigenvalue(min_eig) {}
  double min_eigenvalue;
};

struct ParseError : Error {
  using Error::Error;
};

}  // namespace opweight
