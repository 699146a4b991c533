#pragma once

#include <stdexcept>
#include <string>

namespace mgraph {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape of an operand does not match what the operation requires.
struct DimensionError : Error {
    using Error::Error;
};

// Input is outside the operation's domain (bad axis, empty mask, ...).
struct DomainError : Error {
    using Error::Error;
};

// An operation produced NaN/Inf, or was asked to run in an invalid state.
struct NonFiniteError : Error {
    using Error::Error;
};

struct StateError : Error {
    using Error::Error;
};

// Pixel ray (nearly) parallel to the ground plane.
struct HorizonDegenerateError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace mgraph
