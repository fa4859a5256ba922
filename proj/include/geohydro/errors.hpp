#pragma once

#include <stdexcept>
#include <string>

namespace geohydro {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Violated precondition: bad shape, gauge, mean, axis, parameter.
class DomainError : public Error {
  public:
    using Error::Error;
};

/// A density dropped below the positivity floor.
class PositivityLoss : public Error {
  public:
    using Error::Error;
};

/// Spectral tail grew past the pre-shock guard.
class SpectralBlowup : public Error {
  public:
    using Error::Error;
};

/// Iterative solver did not converge, or a wave function left its chart.
class SolverError : public Error {
  public:
    using Error::Error;
};

/// Malformed scenario configuration or snapshot header.
class ConfigError : public Error {
  public:
    using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
}

} // namespace detail
} // namespace geohydro
