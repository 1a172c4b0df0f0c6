#pragma once

#include <stdexcept>
#include <string>

namespace nlsid {

/// Base class for all toolkit failures. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (exit code 2).
class ConfigError : public Error {
   public:
    using Error::Error;
};

/// Malformed input file or record layout (exit code 2).
class FormatError : public Error {
   public:
    using Error::Error;
};

/// Not enough periods / bins / realizations for the requested estimate.
class InsufficientDataError : public Error {
   public:
    using Error::Error;
};

/// Numerical breakdown: unstable model, singular system, divergence (exit code 3).
class NumericalError : public Error {
   public:
    using Error::Error;
};

/// Simulation blow-up; carries the sample index where the state bound was exceeded.
class InstabilityError : public NumericalError {
   public:
    InstabilityError(const std::string& what, long step) : NumericalError(what), step_(step) {}
    long step() const noexcept { return step_; }

   private:
    long step_;
};

}  // namespace nlsid
