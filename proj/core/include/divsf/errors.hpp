#pragma once

#include <stdexcept>
#include <string>

namespace divsf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of two operands disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input violates a documented precondition (bad probabilities, bad config
/// value, empty policy set, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The policy-induced chain has more than one stationary distribution.
class NonErgodicError : public Error {
 public:
  NonErgodicError(const std::string& what, int null_space_dim)
      : Error(what), null_space_dim_(null_space_dim) {}
  int null_space_dim() const { return null_space_dim_; }

 private:
  int null_space_dim_;
};

/// Distribution iteration hit the horizon cap before reaching the target
/// total-variation distance.
class MixingTimeoutError : public Error {
 public:
  MixingTimeoutError(const std::string& what, long horizon, double last_tv)
      : Error(what), horizon_(horizon), last_tv_(last_tv) {}
  long horizon() const { return horizon_; }
  double last_tv() const { return last_tv_; }

 private:
  long horizon_;
  double last_tv_;
};

/// The constraint d_pi . r_e >= threshold cannot be met by any policy.
class ConstraintInfeasible : public Error {
 public:
  ConstraintInfeasible(const std::string& what, double best_constraint_value)
      : Error(what), best_constraint_value_(best_constraint_value) {}
  double best_constraint_value() const { return best_constraint_value_; }

 private:
  double best_constraint_value_;
};

/// A diversity mechanism was invoked on a set it cannot handle.
class MechanismPrecondition : public Error {
 public:
  using Error::Error;
};

/// Bounding transform called with a zero weight vector.
class DegenerateWeight : public Error {
 public:
  using Error::Error;
};

/// A distribution expected to be strictly positive has a zero entry.
class StrictPositivityError : public Error {
 public:
  using Error::Error;
};

/// Something that cannot happen for valid inputs did happen (e.g. an
/// occupancy LP reported infeasible).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace divsf
