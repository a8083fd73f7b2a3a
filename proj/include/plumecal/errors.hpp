#pragma once

#include <stdexcept>
#include <string>

namespace plumecal {

/// Base class for all library failures. `exit_code()` is what the CLI
/// returns when the error escapes a subcommand.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept = 0;
    virtual const char* kind() const noexcept = 0;
};

/// Malformed or missing configuration, input files, or CLI flags.
class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
    const char* kind() const noexcept override { return "config"; }
};

/// A computation produced non-finite values, failed to factorize, or
/// could not bracket a root.
class NumericalError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
    const char* kind() const noexcept override { return "numerical"; }
};

/// A precondition on an operation's arguments was violated.
class ContractViolation : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
    const char* kind() const noexcept override { return "contract"; }
};

/// Requested explicit step exceeds the stability limit.
class CflViolation : public NumericalError {
public:
    CflViolation(const std::string& what, double admissible)
        : NumericalError(what), admissible_step_(admissible) {}
    double admissible_step() const noexcept { return admissible_step_; }

private:
    double admissible_step_;
};

#define PLUMECAL_REQUIRE(cond, msg)                                   \
    do {                                                              \
        if (!(cond)) throw ::plumecal::ContractViolation(msg);        \
    } while (0)

}  // namespace plumecal
