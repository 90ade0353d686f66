#pragma once

#include <stdexcept>
#include <string>

namespace cverase {

/// A measured quadrature (or meter) has vanishing variance, so conditioning
/// or gain estimation would divide by zero.
class DegenerateMeasurement : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// A state violates the Heisenberg bound where the protocol requires a
/// physical state.
class PhysicalityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when an internal consistency check fails; indicates a bug rather
/// than bad input.
class InternalError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

}  // namespace cverase
