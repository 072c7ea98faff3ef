#pragma once

#include <stdexcept>
#include <string>

namespace ftraj {

// Base class for all toolkit errors so callers can catch one type at the CLI
// boundary while tests can still discriminate.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A re-normalization (QR / norm) failed; usually means dt is too large for
// the requested measurement rate.
struct NumericalBreakdown : Error {
    using Error::Error;
};

// Time grids of series being averaged do not coincide.
struct MismatchedGrids : Error {
    using Error::Error;
};

// Averaging window [t0, tf] contains no samples.
struct EmptyWindow : Error {
    using Error::Error;
};

// A construction requiring an even number of sites received an odd one.
struct OddSize : Error {
    using Error::Error;
};

// Requested many-body system exceeds the supported size range.
struct SizeLimit : Error {
    using Error::Error;
};

// Iterative routine exhausted its budget without reaching tolerance.
struct NoConvergence : Error {
    using Error::Error;
};

// Correlation spectrum lies outside [0,1] by more than the clamp tolerance.
struct SpectrumOutOfRange : Error {
    using Error::Error;
};

// Projective-update denominator collapsed: the opposite outcome has
// probability within tolerance of zero.
struct DegenerateDenominator : Error {
    using Error::Error;
};

// (1 + G+ G-) is numerically singular in the negativity formula.
struct SingularResolvent : Error {
    using Error::Error;
};

// Fit input carries no usable signal (e.g. all values identical).
struct DegenerateData : Error {
    using Error::Error;
};

// Fit called with fewer points than the model needs.
struct InsufficientPoints : Error {
    using Error::Error;
};

// Configuration file malformed or inconsistent.
struct ConfigError : Error {
    using Error::Error;
};

// An engine failed inside a sweep; message carries the sweep-point context.
struct EngineError : Error {
    using Error::Error;
};

// Fit/report input is missing required columns or rows.
struct MissingData : Error {
    using Error::Error;
};

// Checkpoint directory unreadable or internally inconsistent.
struct CorruptCheckpoint : Error {
    using Error::Error;
};

}  // namespace ftraj
