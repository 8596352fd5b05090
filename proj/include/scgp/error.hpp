#pragma once

#include <stdexcept>
#include <string>

namespace scgp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two objects that must share a time grid (or a path count) do not.
class GridMismatch : public Error {
public:
    using Error::Error;
};

/// The Euler recursion produced a non-finite state.
class SimulationBlowUp : public Error {
public:
    using Error::Error;
};

/// A regression target became non-finite during the backward sweep.
class RegressionFailure : public Error {
public:
    using Error::Error;
};

/// The multiplier normaliser is not positive (b_u vanishes on the grid).
class DegenerateKernel : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace scgp
