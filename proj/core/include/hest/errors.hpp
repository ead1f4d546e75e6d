#pragma once

#include <stdexcept>
#include <string>

namespace hest {

/// Mismatched vector/matrix dimensions or otherwise malformed arguments.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A model was evaluated outside its valid domain (e.g. a guarded
/// denominator became non-positive, or a simulated state went non-finite).
class ModelDomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The optimizer encountered non-finite residuals (divergent rollout).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No horizon length can satisfy the requested contraction inequality.
class UnsatisfiableHorizonError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration input (bad weights, bad schedule, bad JSON).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hest
