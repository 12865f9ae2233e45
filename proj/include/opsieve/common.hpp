#pragma once

#include <complex>
#include <cmath>
#include <stdexcept>
#include <string>

namespace opsieve {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// A point z = (x, w) in the time-frequency plane.
struct PhasePoint {
    double x = 0.0;
    double w = 0.0;

    double radius() const { return std::hypot(x, w); }
    double radius_sq() const { return x * x + w * w; }
    double angle() const { return std::atan2(w, x); }

    PhasePoint operator+(PhasePoint o) const { return {x + o.x, w + o.w}; }
    PhasePoint operator-(PhasePoint o) const { return {x - o.x, w - o.w}; }
};

// Error taxonomy. Every throwing path in the library uses one of these, so
// callers (and the CLI exit-code mapping) can tell configuration mistakes
// apart from numerical breakdowns.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid argument values (negative t, non-finite input, ...).
struct DomainError : Error {
    using Error::Error;
};

/// Requested index exceeds the configured maximum.
struct IndexOverflowError : Error {
    using Error::Error;
};

/// Geometry does not fit the grid window.
struct WindowError : Error {
    using Error::Error;
};

/// Operator/window truncation is insufficient for the request.
struct TruncationError : Error {
    using Error::Error;
};

/// A bound is unavailable because the window is degenerate (B = 0) or a
/// denominator is non-positive.
struct DegenerateWindowError : Error {
    using Error::Error;
};

/// Iterative solver failed to converge or a constraint is infeasible.
struct SolverError : Error {
    using Error::Error;
};

}  // namespace opsieve
