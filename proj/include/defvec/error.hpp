#pragma once

#include <stdexcept>
#include <string>

namespace defvec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, missing paths, shape mismatches on load.
/// The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace defvec
