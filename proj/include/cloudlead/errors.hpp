#pragma once

#include <stdexcept>
#include <string>

namespace cloudlead {

// Bad configuration: malformed JSON, unknown ids, invalid parameter ranges.
// CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad data: schema violations, gaps, NaN/negative cells. CLI exit code 3.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cloudlead
