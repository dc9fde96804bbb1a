#pragma once

#include <stdexcept>
#include <string>

namespace boxflow {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimension mismatch, malformed input, invalid construction parameters.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A point lies outside the box by more than the allowed tolerance.
class FeasibilityError : public Error {
public:
    using Error::Error;
};

/// A method was invoked outside the setting it is valid for
/// (e.g. the limited-integrator flow with a non-diagonal gain).
class MethodContractError : public Error {
public:
    using Error::Error;
};

/// The active-set loop revisited a working set or exhausted its cycle budget.
class NonTerminationError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside a model evaluation (PDE solver, conductivity).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Objective returned a non-finite value.
class EvaluationError : public Error {
public:
    using Error::Error;
};

} // namespace boxflow
