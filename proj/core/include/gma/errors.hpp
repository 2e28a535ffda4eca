#pragma once

#include <stdexcept>
#include <string>

namespace gma {

// Precondition violations: bad orders, out-of-window parameters, non-PD input.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A field or density produced a non-finite or non-positive value where one was required.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A transport solver failed (CDF inversion, root finding, Sinkhorn stall).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A request would exceed a hard resource cap (e.g. tensor-rule node count).
class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gma
