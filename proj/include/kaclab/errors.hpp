#pragma once

#include <stdexcept>
#include <string>

namespace kaclab {

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical scheme left its validity envelope (moment drift, negative mass, ...).
class NumericalAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kaclab
