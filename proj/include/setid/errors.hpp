#pragma once

#include <stdexcept>
#include <string>

namespace setid {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range configuration. CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of a tabulated distribution.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Inputs with mismatched dimensions or lengths.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A matrix that must be inverted is rank deficient.
class SingularityError : public Error {
public:
    SingularityError(const std::string& what, long rank) : Error(what), rank_(rank) {}
    long rank() const noexcept { return rank_; }

private:
    long rank_;
};

/// Non-finite state or an unbounded quantity. CLI exit code 3.
class NumericalFault : public Error {
public:
    using Error::Error;
};

/// CDF inversion at probability 0 or 1.
class InversionError : public NumericalFault {
public:
    using NumericalFault::NumericalFault;
};

/// Too few points for a requested statistic.
class StatisticsError : public Error {
public:
    using Error::Error;
};

} // namespace setid
