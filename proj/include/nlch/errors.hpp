#pragma once

#include <stdexcept>
#include <string>

namespace nlch {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidGridError : Error {
  using Error::Error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct UnderResolvedKernelError : Error {
  using Error::Error;
};

// Carries the computed margin so callers can report how far off the run is.
struct HypothesisViolation : Error {
  HypothesisViolation(const std::string& what, double margin)
      : Error(what), margin(margin) {}
  double margin;
};

struct SolverError : Error {
  SolverError(const std::string& what, int iterations, double residual)
      : Error(what), iterations(iterations), residual(residual) {}
  int iterations;
  double residual;
};

struct InstabilityError : Error {
  InstabilityError(const std::string& what, double sup_norm)
      : Error(what), sup_norm(sup_norm) {}
  double sup_norm;
};

// Thrown by simulate to tag the failing step of a nested error.
struct StepError : Error {
  StepError(const std::string& what, int step, bool instability)
      : Error(what), step(step), instability(instability) {}
  int step;
  bool instability;
};

struct StaleTrajectoryError : Error {
  using Error::Error;
};

struct OutOfScopeError : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

}  // namespace nlch
