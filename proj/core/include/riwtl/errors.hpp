#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace riwtl {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible shapes (row/column counts, vector lengths).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Bad values in data: non-finite entries, ragged CSV rows, missing columns.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration: bad grids, unknown method tags, broken constraints.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Problem has no usable solution path (all-zero weights, zero response, ...).
class DegenerateProblemError : public Error {
 public:
  using Error::Error;
};

// Density ratio requested at a point where the denominator vanishes.
class WeightUndefinedError : public Error {
 public:
  using Error::Error;
};

// Solver hit max_iter before meeting the tolerance; carries the last iterate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd last_iterate)
      : Error(what), last_iterate(std::move(last_iterate)) {}

  Eigen::VectorXd last_iterate;
};

}  // namespace riwtl
