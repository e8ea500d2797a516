#pragma once

#include <stdexcept>
#include <string>

namespace blowuplab {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on caller-supplied values was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The feasible-pair construction produced a point that fails verification.
class InfeasibleRegion : public Error {
public:
    using Error::Error;
};

/// A field produced during the fixed-point sweep contains NaN or Inf.
class NonFiniteField : public Error {
public:
    using Error::Error;
};

/// Picard iteration exceeded its iteration budget.
class NoConvergence : public Error {
public:
    using Error::Error;
};

/// Not enough trace samples to run the blow-up extrapolation.
class InsufficientTrace : public Error {
public:
    using Error::Error;
};

/// Cutoff power too small for the scaled integrand to stay bounded.
class UnboundedIntegrand : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& what)
{
    if (!cond) throw InvalidArgument(what);
}

} // namespace detail
} // namespace blowuplab
