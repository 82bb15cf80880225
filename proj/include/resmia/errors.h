#ifndef RESMIA_ERRORS_H_
#define RESMIA_ERRORS_H_

#include <stdexcept>
#include <string>

namespace resmia {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or parameter shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid user-supplied configuration (bad flag, bad config file, bad
// parameter combination). The CLI maps these to a distinct exit code.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing input data (dataset files, checkpoints, score dumps).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace resmia

#endif  // RESMIA_ERRORS_H_
