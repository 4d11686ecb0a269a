#pragma once

#include <stdexcept>
#include <string>

namespace epidhgnn {

// Bad user input: malformed config files, out-of-range parameters, invalid
// CLI arguments, missing/ill-formed data files. The CLI maps this to exit 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Anything that goes wrong after inputs were accepted (I/O failures,
// non-finite gradients, internal inconsistencies). The CLI maps this to exit 1.
class RuntimeError : public std::runtime_error {
public:
    explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace epidhgnn
