#pragma once

#include <stdexcept>
#include <string>

namespace dbi {

// Invalid experiment description: bad parameter ranges, malformed config
// schema, unsupported combinations. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent data at runtime: broken log rows, positivity
// violations, empty inputs. CLI maps this to exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dbi
