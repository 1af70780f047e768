#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace plodd {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected pulse-sequence input. `index` is the offending instant (or -1).
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, int index = -1)
      : Error(what), index_(index) {}
  int index() const { return index_; }

 private:
  int index_;
};

class InvalidExponent : public Error {
 public:
  using Error::Error;
};

/// The IR end of the prefactor integral diverges: alpha >= 2m+2.
class DivergentIntegral : public Error {
 public:
  DivergentIntegral(double alpha, int m)
      : Error("divergent: alpha >= 2m+2 (alpha=" + std::to_string(alpha) +
              ", m=" + std::to_string(m) + ")"),
        alpha_(alpha),
        m_(m) {}
  double alpha() const { return alpha_; }
  int vanishing_order() const { return m_; }

 private:
  double alpha_;
  int m_;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class OrderingViolation : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class MismatchedLength : public Error {
 public:
  using Error::Error;
};

/// File could not be read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace plodd
