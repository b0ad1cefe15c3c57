// errors.hpp
// Error taxonomy shared across the library. The CLI maps these to its
// exit-code contract (config 2, solver divergence 3, other failures 1).

#pragma once

#include <stdexcept>
#include <string>

namespace sadsfol {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& w) : std::runtime_error(w) {}
};

struct GeometryError : std::runtime_error {
    explicit GeometryError(const std::string& w) : std::runtime_error(w) {}
};

struct DegeneracyError : GeometryError {
    explicit DegeneracyError(const std::string& w) : GeometryError(w) {}
};

struct SolverDivergence : std::runtime_error {
    explicit SolverDivergence(const std::string& w) : std::runtime_error(w) {}
};

struct ResonanceError : std::runtime_error {
    explicit ResonanceError(const std::string& w) : std::runtime_error(w) {}
};

struct MatchingError : std::runtime_error {
    explicit MatchingError(const std::string& w) : std::runtime_error(w) {}
};

}  // namespace sadsfol
