#pragma once

#include <stdexcept>
#include <string>

namespace cepred {

// Invalid experiment setup: unknown names, malformed parameters, bad combos.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure that invalidates a run (singular solve, degenerate model,
// tracker blow-up past the stability ceiling).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cepred
