#pragma once

#include <stdexcept>
#include <string>

namespace relpot {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid input or precondition violation (CLI exit code 2).
struct ValidationError : Error {
    using Error::Error;
};

// A numerical procedure could not produce a trustworthy result (CLI exit code 3).
struct NumericalError : Error {
    using Error::Error;
};

struct DuplicateRate : ValidationError { using ValidationError::ValidationError; };
struct NonpositiveMass : ValidationError { using ValidationError::ValidationError; };
struct NegativeTime : ValidationError { using ValidationError::ValidationError; };
struct InvalidMeasure : ValidationError { using ValidationError::ValidationError; };
struct InvalidScatteringData : ValidationError { using ValidationError::ValidationError; };
struct BadGrid : ValidationError { using ValidationError::ValidationError; };
struct GridTooCoarse : ValidationError { using ValidationError::ValidationError; };
struct UnsupportedMeasure : ValidationError { using ValidationError::ValidationError; };

struct NearDegenerate : NumericalError { using NumericalError::NumericalError; };
struct NoConvergence : NumericalError { using NumericalError::NumericalError; };
struct NumericalOverflow : NumericalError { using NumericalError::NumericalError; };

} // namespace relpot
