#ifndef BATES_ERRORS_HPP
#define BATES_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bates {

/// Bad configuration or arguments (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: non-convergence, domain violation (CLI exit code 3).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File input/output failure (CLI exit code 4).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bates

#endif
