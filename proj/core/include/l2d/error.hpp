#ifndef L2D_ERROR_HPP
#define L2D_ERROR_HPP

#include <stdexcept>
#include <string>

namespace l2d {

// Invalid configuration or argument values supplied by the caller.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed input data (CSV rows, checkpoints, manifests).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure during optimization (non-finite loss or parameters).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace l2d

#endif
