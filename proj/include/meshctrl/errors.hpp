// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace meshctrl {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched or unsupported dimensions (e.g. Halton beyond 20 bases).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Tensor quadrature node-count guard exceeded.
class TooManyNodesError : public Error {
 public:
  using Error::Error;
};

/// MLS neighborhood is not unisolvent even after radius enlargement.
class RadiusTooSmallError : public Error {
 public:
  RadiusTooSmallError(const std::string& what, int neighbor_count)
      : Error(what), neighbor_count(neighbor_count) {}
  int neighbor_count;
};

/// Interpolation system is numerically singular.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate(condition_estimate) {}
  double condition_estimate;
};

/// Operation requires a tensor-grid cloud but got a scattered one (or vice versa).
class BackendMismatchError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value.
class NumericOverflowError : public Error {
 public:
  using Error::Error;
};

/// The implicit step stopped contracting.
class PicardDivergenceError : public Error {
 public:
  PicardDivergenceError(const std::string& what, int level, int node)
      : Error(what), level(level), node(node) {}
  int level;
  int node;
};

/// Benchmark-case denominator changes sign on [0, T].
class InvalidCaseError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration could not be parsed or is inconsistent.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, int line = 0) : Error(what), line(line) {}
  int line;
};

/// A solver step failed; carries the failing time level where known.
class SolverError : public Error {
 public:
  explicit SolverError(const std::string& what, int level = -1) : Error(what), level(level) {}
  int level;
};

}  // namespace meshctrl
