#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace rh {

// Thrown when an input, configuration, or precondition is malformed.
// The CLI maps this family to exit code 2.
class validation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown when a numerical procedure fails at runtime (non-convergence,
// bracket not found, scheme instability, accuracy target missed).
// The CLI maps this family to exit code 3.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// +infinity is a legitimate value in this library (diverging face-lifts,
// unbounded super-hedging prices, infinite support-function values).
// It flows through computations and serializers; it is never an error.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_finite(double v) { return std::isfinite(v); }

}  // namespace rh
