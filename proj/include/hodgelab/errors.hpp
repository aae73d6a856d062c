#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hodgelab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A factor, manifold or experiment description violates its invariants.
class InvalidSpecError : public Error {
public:
    using Error::Error;
};

/// A form degree lies outside [0, n] or two forms have mismatched degrees.
class DegreeError : public Error {
public:
    using Error::Error;
};

/// The requested weight cannot be handled by the chosen assembly.
class UnsupportedWeightError : public Error {
public:
    using Error::Error;
};

/// exp(h) differences between neighbouring cells exceed the double range.
class WeightOverflowError : public Error {
public:
    using Error::Error;
};

/// Iterative eigen or linear solve failed; carries the best residuals seen.
class SolverError : public Error {
public:
    SolverError(const std::string& what, std::vector<double> residuals = {})
        : Error(what), best_residuals(std::move(residuals)) {}
    std::vector<double> best_residuals;
};

/// Kernel classification refused: no clear separation between zero and nonzero eigenvalues.
class SpectralGapError : public Error {
public:
    using Error::Error;
};

/// Exact rank computation refused because the matrix is too large.
class SizeError : public Error {
public:
    using Error::Error;
};

/// compress_coordinate evaluated outside its chart [0, R+1).
class OutOfChartError : public Error {
public:
    using Error::Error;
};

/// The compressed region R+1 does not fit inside the truncated grid.
class TruncationConflictError : public Error {
public:
    using Error::Error;
};

/// Malformed experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace hodgelab
