#pragma once

#include <stdexcept>
#include <string>

namespace smcheck {

/// Base class of every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a numerical routine.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid user configuration (CLI flags, grid files, model parameters).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Failure reported by, or while talking to, a simulator.
class SimulatorError : public Error {
public:
    using Error::Error;
};

}  // namespace smcheck
