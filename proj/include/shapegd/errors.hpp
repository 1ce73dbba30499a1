#pragma once

#include <stdexcept>
#include <string>

namespace shapegd {

// Invalid or inconsistent configuration; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Missing or malformed input data; the CLI maps this to exit code 3.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace shapegd
