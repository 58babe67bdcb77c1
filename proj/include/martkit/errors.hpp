#pragma once

#include <stdexcept>
#include <string>

namespace martkit {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- chain construction / linear algebra ----
struct NonStochasticRow : Error { using Error::Error; };
struct ReducibleChain : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct SingularSystem : Error { using Error::Error; };
struct SeriesNotConverged : Error { using Error::Error; };

// ---- trajectories / batches ----
struct InvalidState : Error { using Error::Error; };
struct EmptyBatch : Error { using Error::Error; };

// ---- mixing coefficients ----
struct StateSpaceTooLarge : Error { using Error::Error; };

// ---- spectral machinery ----
struct NotNormalOperator : Error { using Error::Error; };
struct NotReversible : Error { using Error::Error; };
struct WeightAtOne : Error { using Error::Error; };

// ---- Monte Carlo verifiers ----
struct NotRegular : Error { using Error::Error; };
struct DegenerateVariance : Error { using Error::Error; };

// ---- front end ----
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct UnknownCommand : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// An internal two-route cross-check disagreed; indicates a numerical
// pathology rather than bad user input.
struct ConsistencyError : Error { using Error::Error; };

}  // namespace martkit
