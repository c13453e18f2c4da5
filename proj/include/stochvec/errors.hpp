#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace stochvec {

/// Base of every domain error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class KernelUnderresolved : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class DegenerateSample : public Error {
 public:
  using Error::Error;
};

class BlowUp : public Error {
 public:
  using Error::Error;
};

class StepRejected : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

/// Raised when too many nodes fail the forward round-trip of the inverse flow.
class InverseToleranceExceeded : public Error {
 public:
  InverseToleranceExceeded(const std::string& what, double worst_residual, std::size_t failed_nodes)
      : Error(what), worst_residual_(worst_residual), failed_nodes_(failed_nodes) {}

  double worst_residual() const { return worst_residual_; }
  std::size_t failed_nodes() const { return failed_nodes_; }

 private:
  double worst_residual_;
  std::size_t failed_nodes_;
};

/// A statistical comparison exceeded its tolerance. Carries the serialized report.
class TolExceeded : public Error {
 public:
  TolExceeded(const std::string& what, std::string report_json)
      : Error(what), report_json_(std::move(report_json)) {}

  const std::string& report_json() const { return report_json_; }

 private:
  std::string report_json_;
};

}  // namespace stochvec
