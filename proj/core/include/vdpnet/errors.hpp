#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vdpnet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or non-finite input to a model evaluation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Integration left the overflow guard.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Fewer distinct heterogeneity samples than expansion coefficients.
class IllPosedRestriction : public Error {
 public:
  using Error::Error;
};

// A projective integration burst diverged.
class BurstDivergence : public Error {
 public:
  BurstDivergence(const std::string& what, int cycle) : Error(what), cycle_(cycle) {}
  int cycle() const noexcept { return cycle_; }

 private:
  int cycle_;
};

class ProjectionOvershoot : public Error {
 public:
  ProjectionOvershoot(const std::string& what, int cycle) : Error(what), cycle_(cycle) {}
  int cycle() const noexcept { return cycle_; }

 private:
  int cycle_;
};

// One realization of the averaged map failed.
class MemberEvaluationError : public Error {
 public:
  MemberEvaluationError(const std::string& what, std::uint64_t seed) : Error(what), seed_(seed) {}
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

// Newton matrix numerically singular, typically at a fold.
class SingularJacobian : public Error {
 public:
  using Error::Error;
};

// The first continuation step could not be corrected.
class CannotStart : public Error {
 public:
  using Error::Error;
};

class NotAFold : public Error {
 public:
  using Error::Error;
};

class NotAHopf : public Error {
 public:
  using Error::Error;
};

// Critical eigenvalue pair became real while refining a Neimark-Sacker point.
class ResonanceAmbiguity : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field_path, const std::string& message)
      : Error(field_path.empty() ? message : field_path + ": " + message), field_path_(field_path) {}
  const std::string& field_path() const noexcept { return field_path_; }

 private:
  std::string field_path_;
};

}  // namespace vdpnet
