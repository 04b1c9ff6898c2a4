#pragma once

#include <stdexcept>
#include <string>

namespace wsgd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// The problem has no curvature to work with (all-zero components, zero matrix).
class DegenerateProblemError : public Error {
public:
    using Error::Error;
};

/// An argument is outside its admissible range.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A probability vector is negative somewhere or does not sum to one.
class DistributionError : public Error {
public:
    using Error::Error;
};

/// A row with zero Euclidean norm where a row norm is divided by.
class ZeroRowError : public Error {
public:
    using Error::Error;
};

/// A component with positive curvature was given zero sampling weight.
class UnreachableComponentError : public Error {
public:
    using Error::Error;
};

/// A convergence bound is undefined for the supplied constants.
class BoundUndefinedError : public Error {
public:
    using Error::Error;
};

/// File could not be read, parsed or written.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace wsgd
