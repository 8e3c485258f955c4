#pragma once

#include <stdexcept>
#include <string>

namespace emodm {

/// Problems with input data: unreadable files, malformed CSV, series too
/// short to process, mismatched timestamps.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failures: degenerate sample sets, collapsed mixture
/// components, solver non-convergence.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace emodm
