#pragma once

#include <stdexcept>
#include <string>

namespace phimc {

/// Raised when a pulse sequence violates the device protocol (sub-threshold
/// Write, above-threshold read, malformed erase pulse, stale multiplicand).
class ProtocolError : public std::logic_error {
public:
    explicit ProtocolError(const std::string& what) : std::logic_error("protocol: " + what) {}
};

/// Malformed profiles, matrices and command-line configurations.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error("config: " + what) {}
};

/// Inputs a solver or fitter cannot work with (non-SPD system, degenerate data).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error("numeric: " + what) {}
};

}  // namespace phimc
