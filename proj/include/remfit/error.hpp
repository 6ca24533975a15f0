#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace remfit {

// Base class for every error raised by the library. The CLI maps the
// subclasses onto its exit-code table.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or missing input, invalid configuration.
class InputError : public Error {
 public:
  using Error::Error;
};

// A malformed row in a delimited input file.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a data invariant (duplicate inventor on a
// patent, out-of-order record, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Newton iterations exhausted without meeting either stopping rule.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trace)
      : Error(what), trace_(std::move(trace)) {}

  const std::vector<double>& objective_trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

// The negative Hessian at the optimum is not invertible. Carries the point
// estimate so callers can still inspect it.
class SingularHessianError : public Error {
 public:
  SingularHessianError(const std::string& what, Eigen::VectorXd coefficients,
                       int iterations)
      : Error(what), coefficients_(std::move(coefficients)), iterations_(iterations) {}

  const Eigen::VectorXd& coefficients() const noexcept { return coefficients_; }
  int iterations() const noexcept { return iterations_; }

 private:
  Eigen::VectorXd coefficients_;
  int iterations_;
};

// Simulation guard: expected intensity ran away.
class GuardError : public Error {
 public:
  using Error::Error;
};

}  // namespace remfit
