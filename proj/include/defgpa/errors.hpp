#pragma once

#include <stdexcept>
#include <string>

namespace defgpa {

/// Invalid input data, configuration, or precondition violation.
/// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical operation failed (factorization, eigen-solve, divergence).
/// The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace defgpa
