#pragma once

#include <stdexcept>
#include <string>

namespace finrank {

/// Base class for all domain errors raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct NotPSD : Error {
    using Error::Error;
};

struct NotPositiveDefinite : Error {
    using Error::Error;
};

struct NotUpperHalfPlane : Error {
    using Error::Error;
};

struct NearSingular : Error {
    using Error::Error;
};

struct EigensolverFailure : Error {
    using Error::Error;
};

/// Raised by the orthogonality checker when the probe point does not satisfy
/// the blow-up / density-limit hypotheses. Signals "not a common carrier
/// point", not an invariant violation.
struct HypothesesNotMet : Error {
    using Error::Error;
};

struct NormalizationImpossible : Error {
    using Error::Error;
};

struct DegenerateInput : Error {
    using Error::Error;
};

}  // namespace finrank
