#ifndef MINLOR_ERRORS_HPP_
#define MINLOR_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace minlor {

// Bad geometry in the target manifold: non-finite metric entries, a spatial
// block that fails positive definiteness, a pulled-back metric of the wrong
// signature. Carries the offending point in the message.
class GeometryError : public std::runtime_error {
 public:
  explicit GeometryError(const std::string& what) : std::runtime_error(what) {}
};

// Caller broke a documented precondition (mismatched base points, mismatched
// grids, target time below the initial slice).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Picard sweep exceeded max_iter without meeting tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_ratio)
      : std::runtime_error(what), last_contraction_ratio(last_ratio) {}
  double last_contraction_ratio;
};

// A transport step produced non-finite values.
class BlowupError : public std::runtime_error {
 public:
  explicit BlowupError(const std::string& what) : std::runtime_error(what) {}
};

// The strip sizing collapsed below one grid row and the solve could not
// proceed there.
class StarvationError : public std::runtime_error {
 public:
  explicit StarvationError(const std::string& what) : std::runtime_error(what) {}
};

// Sampled curve cannot be represented at the requested resolution
// (aliasing detected after reparametrization).
class RefinementError : public std::runtime_error {
 public:
  explicit RefinementError(const std::string& what) : std::runtime_error(what) {}
};

// Config file or override string violates the schema.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Solver-internal invariant failed (e.g. time monotonicity along a column).
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace minlor

#endif  // MINLOR_ERRORS_HPP_
