#pragma once

#include <stdexcept>
#include <string>

namespace flcboot {

// Base class for everything this library throws.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside its documented domain (negative df, m out of range, ...).
struct DomainError : Error {
  using Error::Error;
};

// Vector/matrix sizes do not line up.
struct DimensionMismatch : Error {
  using Error::Error;
};

// The tested block adds no rank (df_num = 0) or the model is saturated
// (df_den = 0); the F test is undefined for such designs.
struct DegenerateDesign : Error {
  using Error::Error;
};

// Full-design residual sum of squares is zero, so the statistic is 0/0.
struct SaturatedFit : Error {
  using Error::Error;
};

// A matrix required to be positive semidefinite is not.
struct NotPsd : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace flcboot
