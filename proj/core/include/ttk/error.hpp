#pragma once

#include <stdexcept>
#include <string>

namespace ttk {

// Base for every error raised by the library. Subclasses name the failure
// category so callers (and the CLI) can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IndexError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class StateError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class LabelError : public Error { using Error::Error; };
class RateError : public Error { using Error::Error; };

}  // namespace ttk
