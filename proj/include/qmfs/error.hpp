#pragma once

#include <stdexcept>
#include <string>

namespace qmfs {

/// Invalid or unreadable configuration. The CLI maps this to exit code 1.
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// The linearized dynamics have no physical steady state (exit code 2).
class InstabilityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure could not reach its accuracy target.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace qmfs
