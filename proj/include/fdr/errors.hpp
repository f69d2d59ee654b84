#pragma once

#include <stdexcept>
#include <string>

namespace fdr {

// All library failures derive from FdrError so callers can map them to
// process exit codes in one place.
struct FdrError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Netlist and graph construction.
struct SchemaError : FdrError { using FdrError::FdrError; };
struct MultiDriverError : FdrError { using FdrError::FdrError; };
struct UnknownCellTypeError : FdrError { using FdrError::FdrError; };
struct MissingClockError : FdrError { using FdrError::FdrError; };
struct CombinationalLoopError : FdrError { using FdrError::FdrError; };
struct UnknownFlipFlopError : FdrError { using FdrError::FdrError; };

// Simulation and fault injection.
struct StimulusError : FdrError { using FdrError::FdrError; };
struct CycleOutOfRangeError : FdrError { using FdrError::FdrError; };
struct ShapeMismatchError : FdrError { using FdrError::FdrError; };
struct EmptyActiveWindowError : FdrError { using FdrError::FdrError; };
struct MissingTraceError : FdrError { using FdrError::FdrError; };

// Datasets, models, evaluation.
struct EmptyDatasetError : FdrError { using FdrError::FdrError; };
struct DimensionMismatchError : FdrError { using FdrError::FdrError; };
struct TooFewSamplesError : FdrError { using FdrError::FdrError; };
struct KTooLargeError : FdrError { using FdrError::FdrError; };
struct NonConvergenceError : FdrError { using FdrError::FdrError; };
struct LengthMismatchError : FdrError { using FdrError::FdrError; };
struct EmptyInputError : FdrError { using FdrError::FdrError; };
struct ZeroVarianceError : FdrError { using FdrError::FdrError; };
struct NonSearchableError : FdrError { using FdrError::FdrError; };
struct VersionMismatchError : FdrError { using FdrError::FdrError; };
struct ColumnMismatchError : FdrError { using FdrError::FdrError; };

// Configuration (CLI and run configs).
struct ConfigError : FdrError { using FdrError::FdrError; };

} // namespace fdr
